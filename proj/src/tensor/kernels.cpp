#include "plcutseg/tensor/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace plcutseg::kernels {

namespace {
Backend initial_backend() {
  if (const char* env = std::getenv("PLCUTSEG_KERNELS")) {
    if (std::strcmp(env, "ref") == 0) return Backend::Ref;
  }
  return Backend::Omp;
}
Backend g_backend = initial_backend();
}  // namespace

Backend active_backend() { return g_backend; }
void set_backend(Backend b) { g_backend = b; }

}  // namespace plcutseg::kernels
