#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ctal/finetune.hpp"
#include "ctal/synth.hpp"
#include "testing.hpp"

using namespace ctal;
using testing_util::random_tensor;

namespace {

ModelConfig ft_cfg() {
  ModelConfig c;
  c.layers = 1;
  c.heads = 2;
  c.hidden = 24;
  c.vocab_size = 280;
  c.max_text_len = 48;
  c.max_audio_frames = 160;
  c.dropout = 0.0;
  return c;
}

LoadedExample synth_loaded(const SynthConfig& scfg, int index, const FrontendConfig& fcfg,
                           const BbpeVocab& vocab) {
  auto ex = synth_example(scfg, index);
  LoadedExample out;
  out.uid = hash_str("synth" + std::to_string(index), scfg.seed);
  out.ids = vocab.encode(ex.transcript).ids;
  out.features = extract(ex.wave, fcfg).frames;
  out.label = ex.label;
  return out;
}

}  // namespace

TEST_CASE("attention_pool: singleton row, identical rows, and a loop oracle") {
  Graph<double> g;
  Rng rng(1);
  auto v = g.input(random_tensor({6}, rng));
  auto w = g.input(random_tensor({6, 6}, rng));

  auto single = g.input(random_tensor({1, 6}, rng));
  auto p1 = attention_pool(g, single, v, w, {1});
  CHECK((p1.value().mat() - single.value().mat()).cwiseAbs().maxCoeff() < 1e-12);

  Tensor<double> same({4, 6});
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 6; ++j) same.at(i, j) = 0.3 * j - 1;
  auto p2 = attention_pool(g, g.input(same), v, w, {1, 1, 1, 1});
  for (Index j = 0; j < 6; ++j) CHECK(p2.value()[j] == doctest::Approx(same.at(0, j)));

  // explicit oracle with a mask
  auto h = g.input(random_tensor({5, 6}, rng));
  std::vector<uint8_t> valid = {1, 0, 1, 1, 0};
  Var<double> weights;
  auto p3 = attention_pool(g, h, v, w, valid, &weights);
  Eigen::VectorXd scores(5);
  for (Index i = 0; i < 5; ++i) {
    double s = 0;
    for (Index a = 0; a < 6; ++a) {
      double t = 0;
      for (Index b = 0; b < 6; ++b) t += w.value().at(a, b) * h.value().at(i, b);
      s += v.value()[a] * std::tanh(t);
    }
    scores[i] = s;
  }
  double mx = -1e300;
  for (Index i = 0; i < 5; ++i)
    if (valid[i]) mx = std::max(mx, scores[i]);
  double z = 0;
  Eigen::VectorXd wref = Eigen::VectorXd::Zero(5);
  for (Index i = 0; i < 5; ++i)
    if (valid[i]) {
      wref[i] = std::exp(scores[i] - mx);
      z += wref[i];
    }
  wref /= z;
  Eigen::RowVectorXd expect = Eigen::RowVectorXd::Zero(6);
  for (Index i = 0; i < 5; ++i) expect += wref[i] * h.value().mat().row(i);
  CHECK((p3.value().mat() - expect).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(weights.value()[1] == 0.0);
  CHECK(weights.value()[4] == 0.0);
}

TEST_CASE("fuse: numeric layout, zeros, symmetry in modality order") {
  Graph<double> g;
  auto attn_a = g.input(Tensor<double>::row({1, 0}));
  auto attn_w = g.input(Tensor<double>::row({0, 1}));
  auto max_a = g.input(Tensor<double>::row({2, 2}));
  auto max_w = g.input(Tensor<double>::row({1, 1}));
  auto f = fuse(attn_a, attn_w, max_a, max_w);
  REQUIRE(f.value().numel() == 4);
  CHECK(f.value()[0] == 1);
  CHECK(f.value()[1] == 1);
  CHECK(f.value()[2] == 3);
  CHECK(f.value()[3] == 3);

  auto z = fuse(g.input(Tensor<double>({1, 3})), g.input(Tensor<double>({1, 3})),
                g.input(Tensor<double>({1, 3})), g.input(Tensor<double>({1, 3})));
  CHECK(z.value().numel() == 6);
  CHECK(z.value().flat().abs().maxCoeff() == 0.0);

  auto swapped = fuse(attn_w, attn_a, max_w, max_a);
  CHECK(swapped.value().flat().matrix() == f.value().flat().matrix());

  CHECK_THROWS_AS(fuse(attn_a, g.input(Tensor<double>::row({1, 2, 3})), max_a, max_w),
                  DimensionError);
}

TEST_CASE("orthogonal_loss: identical pairs give 2, orthogonal pairs give 0") {
  Graph<double> g;
  Rng rng(2);
  auto a = g.input(random_tensor({1, 8}, rng));
  auto two = orthogonal_loss(g, a, a, a, a);
  CHECK(two.value()[0] == doctest::Approx(2.0).epsilon(1e-12));

  auto e1 = g.input(Tensor<double>::row({1, 0}));
  auto e2 = g.input(Tensor<double>::row({0, 1}));
  auto zero = orthogonal_loss(g, e1, e2, e2, e1);
  CHECK(zero.value()[0] == doctest::Approx(0.0));
}

TEST_CASE("orthogonal_loss: cosine oracle, rescaling invariance, zero-vector guard") {
  Graph<double> g;
  Rng rng(3);
  auto a = g.input(random_tensor({1, 10}, rng));
  auto b = g.input(random_tensor({1, 10}, rng));
  auto c = g.input(random_tensor({1, 10}, rng));
  auto d = g.input(random_tensor({1, 10}, rng));
  auto loss = orthogonal_loss(g, a, b, c, d);

  auto cosine = [](const Tensor<double>& x, const Tensor<double>& y) {
    double dot = (x.flat() * y.flat()).sum();
    double nx = std::sqrt((x.flat() * x.flat()).sum());
    double ny = std::sqrt((y.flat() * y.flat()).sum());
    return std::abs(dot) / (nx * ny);
  };
  const double ref = cosine(a.value(), b.value()) + cosine(c.value(), d.value());
  CHECK(loss.value()[0] == doctest::Approx(ref).epsilon(1e-12));
  CHECK(loss.value()[0] >= 0.0);
  CHECK(loss.value()[0] <= 2.0);

  auto a2 = scale(a, 17.0);
  auto d2 = scale(d, 0.003);
  auto rescaled = orthogonal_loss(g, a2, b, c, d2);
  CHECK(std::abs(rescaled.value()[0] - ref) < 1e-9);

  auto zero_vec = g.input(Tensor<double>({1, 10}));
  auto guarded = orthogonal_loss(g, zero_vec, b, c, d);
  CHECK(guarded.value()[0] == doctest::Approx(cosine(c.value(), d.value())).epsilon(1e-12));
}

TEST_CASE("orthogonality gradients flow (finite differences)") {
  Rng rng(4);
  ParamStore<double> ps;
  auto& a = ps.create("a", {1, 7});
  auto& b = ps.create("b", {1, 7});
  a.value = random_tensor({1, 7}, rng);
  b.value = random_tensor({1, 7}, rng);
  auto loss_value = [&]() {
    Graph<double> g;
    return orthogonal_loss(g, g.leaf(a), g.leaf(b), g.leaf(a), g.leaf(b)).value()[0];
  };
  auto compute = [&]() {
    Graph<double> g;
    g.backward(orthogonal_loss(g, g.leaf(a), g.leaf(b), g.leaf(a), g.leaf(b)));
  };
  auto res = testing_util::finite_diff_check(ps, loss_value, compute);
  CHECK(res.max_rel_err < 1e-6);
}

TEST_CASE("finetune_loss: orth weight composes with the task loss") {
  auto cfg = ft_cfg();
  CtalModel<double> model(cfg, 31, false);
  add_finetune_params(model.params(), cfg, 3, 31);

  LoadedExample ex;
  ex.ids = {Specials::kBos, 40, 41, Specials::kEos};
  Rng rng(5);
  ex.features = MatX<float>::Random(30, 160);

  Graph<double> g;
  auto fwd = finetune_forward(model, g, ex);
  auto plain = finetune_loss(g, fwd, TaskKind::Classification, 2, 0.0, 0.0);
  auto orth = orthogonal_loss(g, fwd.rep.h_attn_a, fwd.rep.h_attn_w, fwd.rep.h_max_a,
                              fwd.rep.h_max_w);
  auto combined = finetune_loss(g, fwd, TaskKind::Classification, 2, 0.0, 1.0);
  CHECK(combined.value()[0] ==
        doctest::Approx(plain.value()[0] + orth.value()[0]).epsilon(1e-12));

  // perfect regression with zero weight -> exactly the target (1-dim head)
  CtalModel<double> reg_model(cfg, 32, false);
  add_finetune_params(reg_model.params(), cfg, 1, 32);
  Graph<double> g2;
  auto fwd2 = finetune_forward(reg_model, g2, ex);
  const double target = fwd2.output.value()[0];
  auto zero = finetune_loss(g2, fwd2, TaskKind::Regression, 0, target, 0.0);
  CHECK(zero.value()[0] == doctest::Approx(0.0));
}

TEST_CASE("pooled outputs ignore padded rows entirely") {
  Graph<double> g;
  Rng rng(8);
  auto v = g.input(random_tensor({5}, rng));
  auto w = g.input(random_tensor({5, 5}, rng));
  auto h = random_tensor({6, 5}, rng);

  Tensor<double> padded({9, 5});
  padded.mat().topRows(6) = h.mat();
  padded.mat().bottomRows(3).setConstant(1e9);  // junk rows that must not leak
  std::vector<uint8_t> mask = {1, 1, 1, 1, 1, 1, 0, 0, 0};

  auto p_ref = attention_pool(g, g.input(h), v, w, std::vector<uint8_t>(6, 1));
  auto p_pad = attention_pool(g, g.input(padded), v, w, mask);
  CHECK((p_ref.value().mat() - p_pad.value().mat()).cwiseAbs().maxCoeff() < 1e-6);

  auto m_ref = max_pool(g.input(h), std::vector<uint8_t>(6, 1));
  auto m_pad = max_pool(g.input(padded), mask);
  CHECK((m_ref.value().mat() - m_pad.value().mat()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("classification argmax is invariant to a constant logit shift") {
  auto cfg = ft_cfg();
  CtalModel<double> model(cfg, 40, false);
  add_finetune_params(model.params(), cfg, 4, 40);
  LoadedExample ex;
  ex.ids = {Specials::kBos, 60, 61, Specials::kEos};
  ex.features = MatX<float>::Random(25, 160);

  Graph<double> g;
  auto fwd = finetune_forward(model, g, ex);
  Index base = 0;
  fwd.output.value().flat().maxCoeff(&base);
  auto shifted = add(fwd.output, g.input(Tensor<double>::full({1, 4}, 1234.5)));
  Index after = 0;
  shifted.value().flat().maxCoeff(&after);
  CHECK(base == after);
}

TEST_CASE("identity embeddings are deterministic with unit self-similarity") {
  auto cfg = ft_cfg();
  CtalModel<float> model(cfg, 33, false);
  add_finetune_params(model.params(), cfg, 4, 33);
  LoadedExample ex;
  ex.ids = {Specials::kBos, 50, 51, 52, Specials::kEos};
  ex.features = MatX<float>::Random(40, 160);

  auto e1 = extract_identity_embedding(model, ex);
  auto e2 = extract_identity_embedding(model, ex);
  CHECK(e1.matrix() == e2.matrix());
  CHECK(e1.size() == 2 * cfg.hidden);
  const double cos = (e1.cast<double>() * e1.cast<double>()).sum() /
                     ((e1.cast<double>() * e1.cast<double>()).sum());
  CHECK(cos == doctest::Approx(1.0));
}

TEST_CASE("fine-tuning overfits a tiny synthetic emotion set") {
  SynthConfig scfg;
  scfg.kind = SynthKind::Emotion;
  scfg.n = 8;
  scfg.seed = 77;
  FrontendConfig fcfg;
  auto vocab = BbpeVocab::byte_only();

  std::vector<LoadedExample> train;
  for (int i = 0; i < scfg.n; ++i) train.push_back(synth_loaded(scfg, i, fcfg, vocab));
  auto task = TaskSpec::from_examples(TaskKind::Classification, train);
  REQUIRE(task.classes.size() == 4);

  auto cfg = ft_cfg();
  CtalModel<float> model(cfg, 35, false);
  add_finetune_params(model.params(), cfg, task.output_dim(), 35);

  FinetuneConfig fc;
  fc.lr = 2e-3;
  fc.epochs = 30;
  fc.batch_size = 4;
  fc.orth_weight = 1.0;
  fc.seed = 35;
  fc.use_dropout = false;
  auto stats = run_finetune(model, task, train, fc);
  CHECK(stats.train_accuracy == doctest::Approx(1.0));

  auto eval = evaluate_task(model, task, train);
  CHECK(eval.metrics[0].first == "wa");
  CHECK(eval.metrics[0].second == doctest::Approx(1.0));
}

TEST_CASE("synthetic speakers separate after a toy fine-tune") {
  SynthConfig scfg;
  scfg.kind = SynthKind::Speaker;
  scfg.n = 12;
  scfg.seed = 91;
  scfg.num_speakers = 2;
  FrontendConfig fcfg;
  auto vocab = BbpeVocab::byte_only();

  std::vector<LoadedExample> train;
  for (int i = 0; i < scfg.n; ++i) train.push_back(synth_loaded(scfg, i, fcfg, vocab));
  auto task = TaskSpec::from_examples(TaskKind::Speaker, train);
  REQUIRE(task.classes.size() == 2);

  auto cfg = ft_cfg();
  CtalModel<float> model(cfg, 36, false);
  add_finetune_params(model.params(), cfg, task.output_dim(), 36);
  FinetuneConfig fc;
  fc.lr = 2e-3;
  fc.epochs = 20;
  fc.batch_size = 4;
  fc.seed = 36;
  fc.use_dropout = false;
  run_finetune(model, task, train, fc);

  std::vector<VecX<float>> emb;
  for (const auto& ex : train) emb.push_back(extract_identity_embedding(model, ex));
  double within = 0, cross = 0;
  long nw = 0, nc = 0;
  for (size_t i = 0; i < emb.size(); ++i)
    for (size_t j = i + 1; j < emb.size(); ++j) {
      const double cos =
          (emb[i].cast<double>() * emb[j].cast<double>()).sum() /
          (std::sqrt((emb[i].cast<double>() * emb[i].cast<double>()).sum()) *
           std::sqrt((emb[j].cast<double>() * emb[j].cast<double>()).sum()));
      if (train[i].label == train[j].label) {
        within += cos;
        ++nw;
      } else {
        cross += cos;
        ++nc;
      }
    }
  CHECK(within / nw > cross / nc);

  auto eval = evaluate_task(model, task, train);
  CHECK(eval.metrics[0].first == "eer");
  CHECK(eval.metrics[0].second <= 0.5);
}
