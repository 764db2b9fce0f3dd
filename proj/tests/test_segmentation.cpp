#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "plcutseg/data/toy_generator.hpp"
#include "plcutseg/segmentation/objective.hpp"

using namespace plcutseg;
using namespace plcutseg::segmentation;
using core::ImageTensor;
using core::SegMask;
using core::ValidityMask;
using data::BatchEntry;
using data::DomainTag;
using data::TrainingBatch;
using tensor::Tensor;
using tensor::Var;

namespace {

BatchEntry entry(const std::string& id, DomainTag tag, const Tensor& img3hw,
                 const Tensor& mask_hw, const Tensor& valid_hw) {
  BatchEntry e;
  e.id = id;
  e.tag = tag;
  e.image = ImageTensor(img3hw, true);
  e.target = SegMask(mask_hw);
  e.validity = ValidityMask(valid_hw);
  return e;
}

TrainingBatch small_batch(Rng& rng, int n, int hw = 8) {
  TrainingBatch b;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    Tensor img = testutil::random_tensor({3, hw, hw}, rng);
    Tensor mask({hw, hw});
    for (std::size_t k = 0; k < mask.numel(); ++k) mask.data()[k] = uni(rng) < 0.3 ? 1.0 : 0.0;
    Tensor valid({hw, hw}, 1.0);
    b.entries.push_back(entry("e" + std::to_string(i),
                              i % 2 ? DomainTag::Synthetic : DomainTag::RealPseudo, img, mask,
                              valid));
  }
  b.original_m = n;
  return b;
}

}  // namespace

TEST_CASE("backbone registry: known names, properties, unknown rejected") {
  Rng rng = seeded_rng(61, "registry");
  auto unet = make_backbone("tiny_unet", 8, rng);
  CHECK(std::string(unet->name()) == "tiny_unet");
  CHECK(unet->stride_requirement() >= 1);
  CHECK(!unet->params("U").empty());

  auto lin = make_backbone("toy_linear", 8, rng);
  CHECK(lin->params("U").size() == 2);

  auto con = make_backbone("constant", 8, rng);
  CHECK_THROWS_WITH_AS(make_backbone("resnet152", 8, rng), doctest::Contains("resnet152"),
                       RuntimeError);

  // forward contract: same spatial dims, single channel, probabilities
  Var x = tensor::constant(testutil::random_tensor({2, 3, 8, 8}, rng));
  for (SegmentationBackbone* U : {unet.get(), lin.get(), con.get()}) {
    Var y = U->forward(x);
    CHECK(y->value.shape() == std::vector<int>({2, 1, 8, 8}));
    CHECK(y->value.min() > 0.0);
    CHECK(y->value.max() < 1.0);
  }

  for (const auto& p : unet->params("U")) CHECK(p.name.rfind("U.", 0) == 0);
}

TEST_CASE("predict: single-image inference produces a soft mask, no graph") {
  Rng rng = seeded_rng(62, "predict");
  auto U = make_backbone("tiny_unet", 4, rng);
  Tensor raw = testutil::random_tensor({3, 8, 8}, rng, 0.0, 1.0);
  SegMask m = predict(*U, ImageTensor(raw, false).normalize());
  CHECK(m.h() == 8);
  CHECK(m.w() == 8);
  CHECK(m.values().min() > 0.0);
  CHECK(m.values().max() < 1.0);
  CHECK_FALSE(m.is_hard());
}

TEST_CASE("segmentation_objective: mean over entries with per-tag breakdown") {
  Rng rng = seeded_rng(63, "objective");
  auto U = make_backbone("tiny_unet", 4, rng);
  TrainingBatch b = small_batch(rng, 4);

  SegObjective obj = segmentation_objective(*U, b);
  CHECK(obj.contributing == 4);
  CHECK(obj.loss->value.item() == doctest::Approx(obj.value.scalar()));

  // oracle: mean of the per-entry dice losses computed independently
  double mean = 0.0;
  {
    tensor::NoGradGuard ng;
    for (const auto& e : b.entries) {
      Var img = tensor::constant(e.image.values());
      Var row = tensor::stack_rows({img});
      Var pred = U->forward(row);
      Tensor pv({8, 8});
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) pv.at(y, x) = pred->value.at(0, 0, y, x);
      mean += core::dice_loss(SegMask(pv), e.target, e.validity, 1.0).scalar() / 4.0;
    }
  }
  CHECK(testutil::rel_err(obj.loss->value.item(), mean) < 1e-9);

  // term names carry the tags that are present
  CHECK_NOTHROW(obj.value.term("dice_synthetic"));
  CHECK_NOTHROW(obj.value.term("dice_real-pseudo"));
}

TEST_CASE("segmentation_objective: order of entries does not change the scalar") {
  Rng rng = seeded_rng(64, "order");
  auto U = make_backbone("tiny_unet", 4, rng);
  TrainingBatch b = small_batch(rng, 4);
  TrainingBatch rev = b;
  std::reverse(rev.entries.begin(), rev.entries.end());
  double a = segmentation_objective(*U, b).loss->value.item();
  double c = segmentation_objective(*U, rev).loss->value.item();
  CHECK(a == doctest::Approx(c).epsilon(1e-12));
}

TEST_CASE("segmentation_objective: all-invalid entries are excluded, all-sentinel errors") {
  Rng rng = seeded_rng(65, "sentinel");
  auto U = make_backbone("tiny_unet", 4, rng);
  TrainingBatch b = small_batch(rng, 3);
  b.entries[1].validity = ValidityMask::all_false(8, 8);

  TrainingBatch without = small_batch(rng, 3);  // fresh rng state differs; rebuild instead
  without.entries = {b.entries[0], b.entries[2]};
  without.original_m = 2;

  SegObjective obj = segmentation_objective(*U, b);
  CHECK(obj.contributing == 2);
  SegObjective ref = segmentation_objective(*U, without);
  CHECK(obj.loss->value.item() == doctest::Approx(ref.loss->value.item()).epsilon(1e-12));

  for (auto& e : b.entries) e.validity = ValidityMask::all_false(8, 8);
  CHECK_THROWS_AS(segmentation_objective(*U, b), ContractError);
}

TEST_CASE("segmentation_objective: analytic gradients match finite differences") {
  // toy_linear exposes two scalars, small enough for exhaustive central FD
  Rng rng = seeded_rng(66, "fd");
  auto U = make_backbone("toy_linear", 4, rng);
  TrainingBatch b = small_batch(rng, 2, 8);

  auto params = U->params("U");
  std::vector<Var> vars;
  for (const auto& p : params) vars.push_back(p.var);
  testutil::gradcheck([&] { return segmentation_objective(*U, b).loss; }, vars, 1e-6);

  // and a spot check on the real backbone within the looser tolerance
  auto unet = make_backbone("tiny_unet", 2, rng);
  auto uparams = unet->params("U");
  std::vector<Var> uvars;
  for (const auto& p : uparams) uvars.push_back(p.var);
  testutil::gradcheck([&] { return segmentation_objective(*unet, b).loss; }, uvars, 1e-4);
}

TEST_CASE("segmentation_objective: live image rows route gradients, stored rows match") {
  Rng rng = seeded_rng(67, "live");
  auto U = make_backbone("tiny_unet", 4, rng);
  TrainingBatch b = small_batch(rng, 2, 8);

  std::vector<Var> rows;
  for (const auto& e : b.entries) rows.push_back(tensor::parameter(e.image.values()));
  Var stacked = tensor::stack_rows(rows);
  SegObjective live = segmentation_objective(*U, stacked, b);
  SegObjective stored = segmentation_objective(*U, b);
  CHECK(live.loss->value.item() == doctest::Approx(stored.loss->value.item()));

  tensor::backward(live.loss);
  for (const auto& r : rows) {
    REQUIRE(r->grad.numel() > 0);
    CHECK(std::fabs(r->grad.sum()) > 0.0);
  }
}

TEST_CASE("predict_for_pseudo_labels: keyed by id, parameters untouched, no mask reads") {
  namespace fs = std::filesystem;
  fs::path root = fs::temp_directory_path() / "plcutseg_test_plinf";
  fs::remove_all(root);
  data::generate_toy_dataset(root, data::ToyCounts{4, 6, 2}, 16, 9);

  Rng rng = seeded_rng(68, "plinf");
  auto U = make_backbone("tiny_unet", 4, rng);
  auto refs = data::ingest_dataset(root / "real", data::Provenance::UnlabeledReal);
  REQUIRE(refs.size() == 6);

  data::AugmentationConfig cfg;
  cfg.source_size = 16;
  cfg.crop_size = 16;

  std::uint64_t before = 0;
  for (const auto& p : U->params("U"))
    before = fnv1a(p.var->value.data(), p.var->value.numel() * sizeof(double), before);

  data::reset_mask_read_counts();
  auto preds = predict_for_pseudo_labels(*U, refs, cfg);
  auto counts = data::mask_read_counts();
  CHECK(counts.unlabeled_real == 0);
  CHECK(counts.labeled_real == 0);
  CHECK(counts.synthetic == 0);

  REQUIRE(preds.size() == refs.size());
  for (const auto& r : refs) {
    REQUIRE(preds.count(r.id) == 1);
    CHECK(preds.at(r.id).h() == 16);
    CHECK(preds.at(r.id).w() == 16);
  }

  std::uint64_t after = 0;
  for (const auto& p : U->params("U"))
    after = fnv1a(p.var->value.data(), p.var->value.numel() * sizeof(double), after);
  CHECK(before == after);

  // determinism: a second pass yields identical masks
  auto again = predict_for_pseudo_labels(*U, refs, cfg);
  for (const auto& [id, m] : preds)
    CHECK(m.values().byte_hash() == again.at(id).values().byte_hash());
}
