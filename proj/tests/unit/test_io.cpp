#include "doctest.h"

#include <cmath>
#include <cstring>
#include <functional>
#include <set>

#include "commands.hpp"
#include "fixtures.hpp"
#include "json.hpp"

using namespace svgp;
using namespace fixtures;

namespace {

template <class E>
std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const E& e) {
    return e.what();
  }
  FAIL("expected exception was not thrown");
  return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

Dataset sine(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rand r(seed);
  Dataset data{r.uniform_matrix(n, d, -2.0, 2.0), MatrixD(n, 1)};
  for (std::size_t i = 0; i < n; ++i) data.y(i, 0) = std::sin(2.0 * data.x(i, 0)) + 0.1 * r.normal();
  return data;
}

// Random raw values so the round trip sees every bit pattern class.
Checkpoint random_checkpoint(const ModelTopology& topo, const Dataset& data, std::uint64_t seed) {
  Checkpoint c;
  c.state = build_model(topo, data, seed);
  c.params = flatten(c.state);
  Rand r(seed + 100);
  for (double& v : c.params.raw) v = r.normal() * std::pow(10.0, r.uniform(-8.0, 1.0));
  c.state = svgp::bind<double>(c.state, std::span<const double>(c.params.raw));
  c.seed = seed;
  c.step = 1234;
  return c;
}

}  // namespace

TEST_CASE("dataset: parse, line endings and round trip") {
  const Dataset a = parse_dataset("x0,x1,y0\n1,2,3\n4.5,-6e-3,7\n");
  CHECK(a.x.rows() == 2);
  CHECK(a.x.cols() == 2);
  CHECK(a.y.cols() == 1);
  CHECK(a.x(1, 1) == -6e-3);
  const Dataset b = parse_dataset("x0,x1,y0\r\n1,2,3\r\n4.5,-6e-3,7\r\n");
  CHECK(b.x.data() == a.x.data());
  CHECK(b.y.data() == a.y.data());
  const Dataset bom = parse_dataset("\xEF\xBB\xBFx0,y0\n1,2\n");
  CHECK(bom.y(0, 0) == 2.0);

  Rand r(1);
  Dataset d{r.normal_matrix(7, 3, 1e3), r.normal_matrix(7, 2, 1e-7)};
  const Dataset back = parse_dataset(format_dataset(d));
  CHECK(back.x.data() == d.x.data());
  CHECK(back.y.data() == d.y.data());

  const Dataset only_x = parse_dataset("x0\n1\n2\n");
  CHECK(only_x.y.cols() == 0);
  const Dataset only_y = parse_dataset("y0,y1\n1,2\n");
  CHECK(only_y.x.cols() == 0);
}

TEST_CASE("dataset: errors name the row and column") {
  CHECK(contains(message_of<DataError>([] { parse_dataset("x0,y0\n1,2\n3,abc\n"); }), "row 3, column y0"));
  CHECK(contains(message_of<DataError>([] { parse_dataset("x0,y0\n1,nan\n"); }), "column y0"));
  CHECK(contains(message_of<DataError>([] { parse_dataset("x0,y0\n1,inf\n"); }), "not a finite number"));
  CHECK(contains(message_of<DataError>([] { parse_dataset("x0,y0\n1,2,3\n"); }), "row 2 has 3 cells"));
  CHECK(contains(message_of<DataError>([] { parse_dataset("x0,y0\n1,\n"); }), "column y0"));
  CHECK(contains(message_of<DataError>([] { parse_dataset("x0,z0\n1,2\n"); }), "'z0'"));
  CHECK(contains(message_of<DataError>([] { parse_dataset("x1,y0\n1,2\n"); }), "expected 'x0'"));
  CHECK(contains(message_of<DataError>([] { parse_dataset("y0,x0\n1,2\n"); }), "expected 'y1'"));
  CHECK_THROWS_AS(parse_dataset(""), DataError);
  CHECK_THROWS_AS(parse_dataset("x0,y0\n"), DataError);
  CHECK_THROWS_AS(read_dataset("/nonexistent/file.csv"), DataError);

  const Dataset no_y = parse_dataset("x0\n1\n");
  CHECK(contains(message_of<DataError>([&] { check_targets(no_y, LikelihoodKind::kGaussian); }), "'y0'"));
  const Dataset labels = parse_dataset("x0,y0\n1,0\n2,1\n3,0.5\n");
  CHECK(contains(message_of<DataError>([&] { check_targets(labels, LikelihoodKind::kBernoulli); }),
                 "row 3, column y0"));
  const Dataset two = parse_dataset("x0,y0,y1\n1,0,1\n");
  CHECK_THROWS_AS(check_targets(two, LikelihoodKind::kBernoulli), DataError);
  CHECK_NOTHROW(check_targets(two, LikelihoodKind::kGaussian));
}

TEST_CASE("run config: fields, defaults and rejection of unknown fields") {
  const RunConfig c = parse_config(R"({
    "data": "d.csv", "seed": 9,
    "model": {"likelihood": "bernoulli", "latent_dim": 0, "whitening": "none",
              "layers": [{"outputs": 2, "num_inducing": 7, "kernel_variance": 0.5, "mean": "linear"},
                         {"mixing": "lmc", "latent_outputs": 1, "shared_inducing": false}]},
    "train": {"steps": 12, "batch_size": 4, "learning_rate": 0.05, "objective": "deep", "mc": 2,
              "freeze_generative_steps": 3}
  })",
                                   "/base");
  CHECK(c.data == std::filesystem::path("/base/d.csv"));
  CHECK(c.checkpoint == std::filesystem::path("/base/model.json"));
  CHECK(trace_path_for(c) == std::filesystem::path("/base/model.trace.csv"));
  CHECK(c.train.seed == 9);
  CHECK(c.train.steps == 12);
  CHECK(c.train.batch_size == 4);
  CHECK(c.train.adam.learning_rate == 0.05);
  CHECK(c.train.objective.kind == Objective::kDeep);
  CHECK(c.train.objective.n_mc == 2);
  CHECK(c.train.freeze_generative_steps == 3);
  CHECK(c.topology.likelihood == LikelihoodKind::kBernoulli);
  CHECK(c.topology.whitening == Whitening::kNone);
  REQUIRE(c.topology.layers.size() == 2);
  CHECK(c.topology.layers[0].num_inducing == 7);
  CHECK(*c.topology.layers[0].kernel_variance == 0.5);
  CHECK(*c.topology.layers[0].mean == MeanFamily::kLinear);
  CHECK(c.topology.layers[1].mixing == MixingKind::kLmc);
  CHECK_FALSE(c.topology.layers[1].shared_inducing);
  CHECK_FALSE(c.topology.layers[1].kernel_variance.has_value());

  CHECK(contains(message_of<ConfigError>([] { parse_config(R"({"data": "d", "sede": 1})"); }), "'sede'"));
  CHECK(contains(message_of<ConfigError>([] { parse_config(R"({"data": "d", "train": {"step": 1}})"); }),
                 "'train.step'"));
  CHECK(contains(message_of<ConfigError>(
                     [] { parse_config(R"({"data": "d", "model": {"layers": [{"inducing": "box"}]}})"); }),
                 "'model.layers[0].inducing'"));
  CHECK(contains(message_of<ConfigError>([] { parse_config(R"({"data": "d", "train": {"steps": -1}})"); }),
                 "'train.steps'"));
  CHECK(contains(message_of<ConfigError>([] { parse_config(R"({"train": {}})"); }), "'data'"));
  CHECK(contains(message_of<ConfigError>([] { parse_config(R"({"data": "d", "train": {"learning_rate": "x"}})"); }),
                 "'train.learning_rate'"));
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"data": "d", "format_version": 2})"), VersionError);
  CHECK_THROWS_AS(read_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("checkpoint: round trip is bit-exact across topologies") {
  const Dataset d1 = sine(15, 1, 3);
  const Dataset d2 = sine(15, 2, 4);
  std::vector<std::pair<ModelTopology, const Dataset*>> cases;
  {
    ModelTopology t;
    cases.emplace_back(t, &d1);
  }
  {
    ModelTopology t;
    LayerTopology inner;
    inner.outputs = 3;
    inner.mixing = MixingKind::kLmc;
    inner.latent_outputs = 2;
    inner.shared_inducing = false;
    LayerTopology last;
    last.inducing = InducingKind::kDerivative;
    last.mean = MeanFamily::kConstant;
    t.layers = {inner, last};
    t.whitening = Whitening::kMeanOnly;
    cases.emplace_back(t, &d2);
  }
  {
    ModelTopology t;
    LayerTopology inner;
    inner.outputs = 2;
    inner.mean = MeanFamily::kLinear;
    t.layers = {inner, LayerTopology{}};
    t.latent_dim = 1;
    t.whitening = Whitening::kNone;
    cases.emplace_back(t, &d1);
  }
  {
    ModelTopology t;
    t.likelihood = LikelihoodKind::kBernoulli;
    Dataset labels = d1;
    for (std::size_t i = 0; i < labels.size(); ++i) labels.y(i, 0) = labels.y(i, 0) > 0 ? 1.0 : 0.0;
    static Dataset keep;
    keep = labels;
    cases.emplace_back(t, &keep);
  }
  for (std::size_t k = 0; k < cases.size(); ++k) {
    CAPTURE(k);
    const Checkpoint c = random_checkpoint(cases[k].first, *cases[k].second, 10 + k);
    const std::string text = format_checkpoint(c);
    const Checkpoint back = parse_checkpoint(text);
    REQUIRE(back.params.size() == c.params.size());
    CHECK(std::memcmp(back.params.raw.data(), c.params.raw.data(), c.params.size() * sizeof(double)) == 0);
    CHECK(format_checkpoint(back) == text);
    CHECK(back.seed == c.seed);
    CHECK(back.step == c.step);
    // The rebuilt model evaluates identically.
    const MatrixD xs = cases[k].second->x;
    const auto pa = predict_deep(c.state.model, xs, {}, EvalSettings{1, 0, {}});
    const auto pb = predict_deep(back.state.model, xs, {}, EvalSettings{1, 0, {}});
    for (std::size_t i = 0; i < xs.rows(); ++i) {
      CHECK(pa.pooled[i].mean == pb.pooled[i].mean);
      CHECK(pa.pooled[i].var == pb.pooled[i].var);
    }
  }
}

TEST_CASE("checkpoint: versions and unknown fields") {
  const Checkpoint c = random_checkpoint(ModelTopology{}, sine(10, 1, 5), 1);
  const std::string text = format_checkpoint(c);
  auto doc = nlohmann::json::parse(text);

  auto future = doc;
  future["format_version"] = 2;
  CHECK(contains(message_of<VersionError>([&] { parse_checkpoint(future.dump()); }), "format_version 2"));
  auto missing = doc;
  missing.erase("format_version");
  CHECK_THROWS_AS(parse_checkpoint(missing.dump()), VersionError);
  auto extra = doc;
  extra["optimizer_state"] = nlohmann::json::array();
  CHECK(contains(message_of<VersionError>([&] { parse_checkpoint(extra.dump()); }), "'optimizer_state'"));
  auto nested = doc;
  nested["model"]["layers"][0]["latents"][0]["period"] = 1.0;
  CHECK_THROWS_AS(parse_checkpoint(nested.dump()), VersionError);

  auto renamed = doc;
  renamed["parameters"][0]["name"] = "layer0.latent0.W";
  CHECK_THROWS_AS(parse_checkpoint(renamed.dump()), ConfigError);
  auto short_raw = doc;
  short_raw["parameters"][1]["raw"].erase(0);
  CHECK_THROWS_AS(parse_checkpoint(short_raw.dump()), ConfigError);
  CHECK_THROWS_AS(parse_checkpoint("not json"), ConfigError);
}

TEST_CASE("gen-data: letters follow the glyph table") {
  // Lit pixels counted by hand from the 5 x 7 bitmaps.
  LettersParams p;
  p.text = "I";
  CHECK(gen_letters(p, 0).size() == 11);
  p.text = "D";
  CHECK(gen_letters(p, 0).size() == 16);
  p.text = "L";
  CHECK(gen_letters(p, 0).size() == 11);
  p.text = "DGP";
  const Dataset dgp = gen_letters(p, 0);
  CHECK(dgp.size() == 16 + 18 + 15);
  p.scale = 3;
  CHECK(gen_letters(p, 0).size() == 3 * 49);
  for (std::size_t i = 0; i < dgp.size(); ++i) {
    CHECK(dgp.x(i, 0) > 0.0);
    CHECK(dgp.x(i, 0) < 1.0);
    CHECK(dgp.y(i, 0) > 0.0);
    CHECK(dgp.y(i, 0) < 1.0);
  }
  // "I" is a centred column: x takes only the stem and serif columns.
  p.text = "I";
  p.scale = 1;
  const Dataset i = gen_letters(p, 0);
  std::set<double> xs;
  for (std::size_t k = 0; k < i.size(); ++k) xs.insert(i.x(k, 0));
  CHECK(xs.size() == 3);
  // Without noise the generator ignores the seed.
  p.text = "DGP";
  CHECK(gen_letters(p, 1).y.data() == dgp.y.data());
  p.noise = 0.01;
  CHECK(gen_letters(p, 1).y.data() != dgp.y.data());
  p.text = "a1";
  CHECK_THROWS_AS(gen_letters(p, 0), ConfigError);
  p.text = "  ";
  CHECK_THROWS_AS(gen_letters(p, 0), ConfigError);
}

TEST_CASE("gen-data: mixture and steps") {
  MixtureParams mp;
  mp.n = 4000;
  mp.gap = 0.0;
  const Dataset uni = gen_mixture(mp, 2);
  // Zero gap: residuals around the shared branch are plain noise.
  double s = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < uni.size(); ++i) {
    const double r = uni.y(i, 0) - std::sin(1.5 * uni.x(i, 0));
    s += r;
    ss += r * r;
  }
  const double n = static_cast<double>(uni.size());
  CHECK(std::abs(s / n) < 3.0 * mp.noise / std::sqrt(n));
  CHECK(std::sqrt(ss / n) == doctest::Approx(mp.noise).epsilon(0.05));

  mp.gap = 2.0;
  const Dataset bi = gen_mixture(mp, 2);
  std::size_t upper = 0;
  for (std::size_t i = 0; i < bi.size(); ++i) {
    const double r = bi.y(i, 0) - std::sin(1.5 * bi.x(i, 0));
    CHECK(std::abs(std::abs(r) - 1.0) < 6.0 * mp.noise);
    upper += r > 0.0;
  }
  // Branch choice is Bernoulli(1/2): within 4 SD.
  CHECK(std::abs(static_cast<double>(upper) - n / 2.0) < 4.0 * std::sqrt(n / 4.0));
  CHECK(gen_mixture(mp, 2).y.data() == bi.y.data());
  CHECK(gen_mixture(mp, 3).y.data() != bi.y.data());

  StepsParams sp;
  sp.noise = 0.0;
  const Dataset st = gen_steps(sp, 1);
  for (std::size_t i = 0; i < st.size(); ++i) {
    const double x = st.x(i, 0);
    const int k = static_cast<int>(std::floor((x + 1.0) / 0.5));
    CHECK(st.y(i, 0) == (k % 2 == 0 ? 0.0 : 1.0));
  }
  mp.n = 0;
  CHECK_THROWS_AS(gen_mixture(mp, 0), ConfigError);
}

TEST_CASE("gen-data: prior draws") {
  PriorDrawParams p;
  p.grid = 11;
  p.draws = 4000;
  const Dataset d = gen_prior_draws(p, 5);
  REQUIRE(d.y.cols() == 4000);
  CHECK(d.x(10, 0) == 10.0);
  // Depth 1 is the GP prior itself: zero mean, unit variance, and the RBF
  // correlation between neighbours one grid step (1.0) apart.
  const double n = 4000.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    double s = 0.0, ss = 0.0;
    for (std::size_t k = 0; k < d.y.cols(); ++k) {
      s += d.y(i, k);
      ss += d.y(i, k) * d.y(i, k);
    }
    CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(ss / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  }
  double c = 0.0;
  for (std::size_t k = 0; k < d.y.cols(); ++k) c += d.y(3, k) * d.y(4, k);
  CHECK(std::abs(c / n - std::exp(-0.5 / 0.49)) < 0.06);

  for (std::size_t depth : {2, 4, 8}) {
    p.depth = depth;
    p.draws = 3;
    const Dataset a = gen_prior_draws(p, 7), b = gen_prior_draws(p, 7);
    CHECK(a.y.data() == b.y.data());
    for (double v : a.y.data()) CHECK(std::isfinite(v));
  }
  p.depth = 3;
  CHECK_NOTHROW(gen_prior_draws(p, 1));
  p.depth = 9;
  CHECK_THROWS_AS(gen_prior_draws(p, 1), ConfigError);
}

TEST_CASE("generate: parameter objects") {
  CHECK(generate("letters", R"({"text": "I"})", 0).size() == 11);
  CHECK(generate("steps", "", 0).size() == 200);
  CHECK(generate("mixture", "{\"n\": 7}", 0).size() == 7);
  CHECK_THROWS_AS(generate("letters", R"({"depth": 2})", 0), ConfigError);
  CHECK_THROWS_AS(generate("mixture", R"({"n": -1})", 0), ConfigError);
  CHECK_THROWS_AS(generate("spiral", "", 0), ConfigError);
  CHECK_THROWS_AS(generate("steps", "[1]", 0), ConfigError);
}

TEST_CASE("objective estimate: prior model has the closed-form expectation") {
  // q(u) = p(u) gives KL = 0 and f_n ~ N(0, k_nn), so each term is
  // E ln N(y | f, s2) = -0.5 ln(2 pi s2) - (y^2 + k_nn) / (2 s2).
  const Dataset d = sine(12, 1, 8);
  ModelTopology t;
  t.noise_variance = 0.3;
  const ModelState<double> s = build_model(t, d, 2);
  double want = 0.0;
  const double s2 = s.model.likelihood.variance, knn = s.model.layers[0].latents[0].kernel.variance;
  for (std::size_t i = 0; i < d.size(); ++i)
    want += -0.5 * std::log(2.0 * M_PI * s2) - (d.y(i, 0) * d.y(i, 0) + knn) / (2.0 * s2);
  const Estimate e = estimate_objective(s, d, ObjectiveConfig{}, 3, 0);
  CHECK(e.mean == doctest::Approx(want).epsilon(1e-12));
  CHECK(e.se == 0.0);
  CHECK(std::isnan(estimate_objective(s, d, ObjectiveConfig{}, 1, 0).se));
  CHECK_THROWS_AS(estimate_objective(s, d, ObjectiveConfig{}, 0, 0), ConfigError);
}
