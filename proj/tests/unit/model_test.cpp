#include <doctest.h>

#include <cmath>
#include <random>

#include "pg2net/error.hpp"
#include "pg2net/model/model.hpp"
#include "pg2net/numeric/ops.hpp"
#include "support/model_fixture.hpp"
#include "support/oracles.hpp"

using namespace pg2net;
using namespace pg2net::model;
using numeric::Tape;
using numeric::Tensor;
using pg2net::testing::make_fixture;
using pg2net::testing::miniature_dims;
using pg2net::testing::small_corpus;

namespace {

const pg2net::testing::ModelFixture& mini() {
  static const auto f = make_fixture(small_corpus(3, 3, 5, 3), miniature_dims());
  return f;
}

data::QueryGroup short_group(const pg2net::testing::ModelFixture& f, std::size_t history = 6) {
  auto g = f.train.back();
  g.history.erase(g.history.begin(), g.history.end() - static_cast<std::ptrdiff_t>(std::min(history, g.history.size())));
  return g;
}

void randomize(const std::vector<numeric::NamedTensor>& params, std::uint64_t seed, double bound) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-bound, bound);
  for (const auto& p : params) {
    for (double& v : Tensor(p.tensor).mutable_data()) v = u(rng);
  }
}

void zero_cell(numeric::LstmCellParams& c) {
  for (auto t : c.tensors()) {
    for (double& v : t.mutable_data()) v = 0.0;
  }
}

pg2net::testing::ScalarLstm scalar_of(const numeric::LstmCellParams& p) {
  pg2net::testing::ScalarLstm s;
  s.wx.assign(4, std::vector<double>(p.input_size()));
  for (int g = 0; g < 4; ++g) {
    for (std::size_t j = 0; j < p.input_size(); ++j) s.wx[g][j] = p.w_input.at(g * p.input_size() + j);
    s.wh[g] = p.w_hidden.at(g);
    s.b[g] = p.bias.at(g);
  }
  return s;
}

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

double prob_sum(const Tensor& log_probs) {
  double s = 0.0;
  for (double v : log_probs.data()) s += std::exp(v);
  return s;
}

}  // namespace

TEST_CASE("miniature fixture vocabulary") {
  CHECK(mini().config.locations == 5);
  CHECK(mini().config.categories == 3);
  CHECK(mini().config.users == 3);
  CHECK_FALSE(mini().train.empty());
  CHECK_FALSE(mini().test.empty());
}

TEST_CASE("POI embedding widths and frozen rows") {
  ModelConfig dims;  // defaults: 500 / 10 / 50
  const auto f = make_fixture(small_corpus(1, 2, 4, 2), dims);
  const auto m = f.make();
  Tape tape(false);
  const auto& v = f.train.front().visits.front();
  const Tensor e = m->embed(tape, v);
  CHECK(e.size() == 560);
  for (std::size_t j = 0; j < 500; ++j) CHECK(e.at(j) == f.locations.row(v.location)[j]);

  const auto cdr = make_fixture(small_corpus(1, 2, 4, 2), dims, data::DatasetMode::kCdr);
  CHECK(cdr.make()->embed(tape, v).size() == 510);

  data::Visit unknown = v;
  unknown.location = data::kUnknown;
  const Tensor z = m->embed(tape, unknown);
  for (std::size_t j = 0; j < 500; ++j) CHECK(z.at(j) == 0.0);
  unknown.location = 99;
  CHECK_THROWS_AS(m->embed(tape, unknown), DataError);
}

TEST_CASE("history and recent encoders: shapes and zero parameters") {
  auto m = mini().make();
  Tape tape(false);
  const auto& visits = mini().train.front().visits;
  CHECK(m->encode_history(tape, {visits[0]}).shape() == numeric::Shape{8, 1});
  CHECK(m->encode_history(tape, visits).shape() == numeric::Shape{8, visits.size()});
  CHECK(m->encode_recent(tape, visits).size() == visits.size());
  CHECK_THROWS_AS(m->encode_history(tape, {}), DataError);

  zero_cell(m->history_forward);
  zero_cell(m->history_backward);
  zero_cell(m->recent_cell);
  const Tensor zeros = m->encode_history(tape, visits);
  for (double x : zeros.data()) CHECK(x == 0.0);
  for (const Tensor& h : m->encode_recent(tape, visits)) {
    for (double x : h.data()) CHECK(x == 0.0);
  }
}

TEST_CASE("H=1 encoders match a scalar transcription of both passes") {
  auto dims = miniature_dims();
  dims.hidden = 1;
  const auto f = make_fixture(small_corpus(3, 3, 5, 3), dims);
  const auto m = f.make(Variant::kFull, 9);
  Tape tape(false);
  const auto& visits = f.train.front().visits;
  std::vector<std::vector<double>> x;
  for (const auto& v : visits) x.push_back(values(m->embed(tape, v)));

  const Tensor hist = m->encode_history(tape, visits);
  const auto fwd = scalar_of(m->history_forward), bwd = scalar_of(m->history_backward), rec = scalar_of(m->recent_cell);
  const std::size_t n = visits.size();
  std::vector<double> hf(n), hb(n), hr(n);
  double h = 0, c = 0;
  for (std::size_t i = 0; i < n; ++i) {
    fwd.step(x[i], h, c);
    hf[i] = h;
  }
  h = c = 0;
  for (std::size_t i = n; i-- > 0;) {
    bwd.step(x[i], h, c);
    hb[i] = h;
  }
  h = c = 0;
  for (std::size_t i = 0; i < n; ++i) {
    rec.step(x[i], h, c);
    hr[i] = h;
  }
  const auto recent = m->encode_recent(tape, visits);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(hist.at(0 * n + i) == doctest::Approx(hf[i]).epsilon(1e-12));
    CHECK(hist.at(1 * n + i) == doctest::Approx(hb[i]).epsilon(1e-12));
    CHECK(recent[i].item() == doctest::Approx(hr[i]).epsilon(1e-12));
  }
}

TEST_CASE("personalized preference fixtures") {
  Tape tape(false);
  const Tensor w_att = Tensor::from({2, 4}, {0.5, -1.0, 0.2, 0.3, 1.5, 0.1, -0.4, 0.9});
  const Tensor u = Tensor::vector({0.7, -0.2});

  const Tensor single = Tensor::from({4, 1}, {1, 2, 3, 4});
  auto p = personalized_preference(tape, single, w_att, u);
  CHECK(p.attention.item() == 1.0);
  CHECK(values(p.preference) == std::vector<double>{1, 2, 3, 4});

  const Tensor same = Tensor::from({4, 3}, {1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4});
  p = personalized_preference(tape, same, w_att, u);
  for (double a : p.attention.data()) CHECK(a == doctest::Approx(1.0 / 3).epsilon(1e-15));

  // H = 2 (2H = 4), three random columns, evaluated by hand
  const std::vector<std::vector<double>> cols{{0.3, -0.1, 0.8, 0.2}, {-0.5, 0.4, 0.1, 0.9}, {0.2, 0.2, -0.7, 0.05}};
  std::vector<double> flat(12);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 3; ++j) flat[i * 3 + j] = cols[j][i];
  }
  p = personalized_preference(tape, Tensor::from({4, 3}, flat), w_att, u);
  std::vector<double> score(3);
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t r = 0; r < 2; ++r) {
      double proj = 0.0;
      for (std::size_t i = 0; i < 4; ++i) proj += w_att.at(r * 4 + i) * cols[j][i];
      score[j] += proj * u.at(r);
    }
  }
  const double z = std::exp(score[0]) + std::exp(score[1]) + std::exp(score[2]);
  double total = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(p.attention.at(j) == doctest::Approx(std::exp(score[j]) / z).epsilon(1e-12));
    total += p.attention.at(j);
  }
  CHECK(std::abs(total - 1.0) < 1e-9);
  for (std::size_t i = 0; i < 4; ++i) {
    double expect = 0.0;
    for (std::size_t j = 0; j < 3; ++j) expect += std::exp(score[j]) / z * cols[j][i];
    CHECK(p.preference.at(i) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("attention is a distribution invariant to score shifts") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3, 3);
  Tape tape(false);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(1 + rng() % 30);
    for (double& x : s) x = u(rng);
    const Tensor a = numeric::ops::softmax(tape, Tensor::vector(s));
    std::vector<double> shifted = s;
    for (double& x : shifted) x += 17.25;
    const Tensor b = numeric::ops::softmax(tape, Tensor::vector(shifted));
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(a.at(i) >= 0.0);
      CHECK(a.at(i) == doctest::Approx(b.at(i)).epsilon(1e-12));
      total += a.at(i);
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
}

TEST_CASE("group preference weighted sums") {
  Tape tape(false);
  const Tensor same = Tensor::from({2, 3}, {1, 1, 1, -2, -2, -2});
  const auto p = weighted_sum(tape, same, {0.2, 0.2, 0.2});
  CHECK(p.at(0) == doctest::Approx(0.6));
  CHECK(p.at(1) == doctest::Approx(-1.2));
  // n = 2, H = 1
  const Tensor h = Tensor::from({1, 2}, {0.4, -0.3});
  CHECK(weighted_sum(tape, h, {0.7, 0.3}).item() == doctest::Approx(0.4 * 0.7 - 0.3 * 0.3));
  CHECK_THROWS_AS(weighted_sum(tape, h, {1.0}), ShapeError);
}

TEST_CASE("forward output: group vectors match the priors") {
  const auto& f = mini();
  const auto m = f.make(Variant::kFull, 4);
  Tape tape(false);
  const auto g = f.train.back();
  const auto out = m->forward(tape, g, true);
  REQUIRE(out.samples.size() == g.target_positions.size());
  const auto& s = out.samples.back();
  REQUIRE(s.details);
  const std::size_t k = s.position;
  const auto w = priors::sequence_weights(*f.priors, g.visits[k - 1], g.history);
  const Tensor hist = m->encode_history(tape, g.history);
  const auto expect = weighted_sum(tape, hist, w.time);
  CHECK(values(s.details->long_parts[1]) == values(expect));
  for (std::size_t i = 0; i < s.details->long_term.size(); ++i) {
    CHECK(s.details->long_term.at(i) == doctest::Approx(s.details->long_parts[0].at(i) + s.details->long_parts[1].at(i) +
                                                         s.details->long_parts[2].at(i)));
  }
  CHECK(s.details->short_term.size() == 4);
  CHECK(out.attention.size() == g.history.size());

  const auto cdr = make_fixture(small_corpus(3, 3, 5, 3), miniature_dims(), data::DatasetMode::kCdr);
  const auto out_cdr = cdr.make()->forward(tape, cdr.train.back(), true);
  const auto& d = *out_cdr.samples.back().details;
  CHECK_FALSE(d.long_parts[2].defined());
  CHECK_FALSE(d.short_parts[2].defined());
  for (std::size_t i = 0; i < d.long_term.size(); ++i) {
    CHECK(d.long_term.at(i) == d.long_parts[0].at(i) + d.long_parts[1].at(i));
  }
}

TEST_CASE("prediction head: distribution, zero weights and concat widths") {
  const auto& f = mini();
  auto m = f.make();
  Tape tape(false);
  auto out = m->forward(tape, f.train.front());
  for (const auto& s : out.samples) {
    for (double lp : s.log_probs.data()) CHECK(lp == doctest::Approx(std::log(1.0 / 5)).epsilon(1e-12));
  }
  randomize({{"p", m->prediction}}, 2, 1.0);
  out = m->forward(tape, f.train.front());
  for (const auto& s : out.samples) CHECK(std::abs(prob_sum(s.log_probs) - 1.0) < 1e-9);

  ModelConfig defaults;
  CHECK(defaults.concat_dim() == 2540);
  defaults.variant = Variant::kGNet;
  CHECK(defaults.concat_dim() == 1540);
  defaults.variant = Variant::kPNet;
  CHECK(defaults.concat_dim() == 1040);
  defaults.variant = Variant::kLong;
  CHECK(defaults.concat_dim() == 2040);
  defaults.variant = Variant::kShort;
  CHECK(defaults.concat_dim() == 1540);
  defaults.variant = Variant::kNoAux;
  CHECK(defaults.concat_dim() == 2540);
  CHECK(defaults.input_dim() == 560);
}

TEST_CASE("loss fixtures") {
  Tape tape(false);
  const Tensor lp = Tensor::vector({std::log(0.25), std::log(0.75)});
  const Tensor v = Tensor::vector({1.0, 2.0});
  const Tensor h = Tensor::vector({1.0, 0.0});  // ‖v − ĥ‖² = 4
  CHECK(sample_loss(tape, lp, 0, h, v, 0.1).item() == doctest::Approx(std::log(4.0) + 0.4).epsilon(1e-12));
  CHECK(sample_loss(tape, lp, 0, h, v, 0.1).item() == doctest::Approx(1.7863).epsilon(1e-4));
  CHECK(sample_loss(tape, lp, 0, h, v, 0.0).item() == -std::log(0.25));
  const Tensor certain = Tensor::vector({0.0, -1e300});
  CHECK(sample_loss(tape, certain, 0, v, v, 0.1).item() == 0.0);
  CHECK_THROWS_AS(sample_loss(tape, lp, data::kUnknown, h, v, 0.1), DataError);
}

TEST_CASE("auxiliary head is a pure side branch") {
  const auto& f = mini();
  const auto full = f.make(Variant::kFull, 5);
  const auto no_aux = f.make(Variant::kNoAux, 5);
  randomize(full->parameters(), 8, 0.5);
  randomize(no_aux->parameters(), 8, 0.5);
  Tape tape(false);
  for (const auto& g : f.train) {
    const auto a = full->forward(tape, g), b = no_aux->forward(tape, g);
    for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(values(a.samples[i].log_probs) == values(b.samples[i].log_probs));
    if (a.trained > 0) CHECK(a.loss.item() > b.loss.item());
  }
}

TEST_CASE("frozen tables receive exactly zero gradient") {
  const auto& f = mini();
  auto m = f.make(Variant::kFull, 6);
  randomize({{"p", m->prediction}}, 3, 0.5);
  Tape tape;
  const auto out = m->forward(tape, f.train.back());
  tape.backward(out.loss);
  CHECK_FALSE(m->location_table.requires_grad());
  CHECK_FALSE(m->category_table.requires_grad());
  for (double gval : m->location_table.grad()) CHECK(gval == 0.0);
  for (double gval : m->category_table.grad()) CHECK(gval == 0.0);
  bool any = false;
  for (const auto& p : m->parameters()) {
    for (double gval : p.tensor.grad()) any = any || gval != 0.0;
  }
  CHECK(any);
}

TEST_CASE("end-to-end gradients match finite differences") {
  const auto& f = mini();
  for (Variant v : {Variant::kFull, Variant::kGNet, Variant::kPNet}) {
    CAPTURE(to_string(v));
    auto m = f.make(v, 11);
    randomize({{"p", m->prediction}}, 12, 0.5);
    const auto group = short_group(f);
    // the batch-mean objective used in training
    auto loss = [&](Tape& tape) {
      const auto out = m->forward(tape, group);
      return numeric::ops::scale(tape, out.loss, 1.0 / static_cast<double>(out.trained));
    };
    const auto r = pg2net::testing::gradient_check(loss, m->parameters(), 1e-5, pg2net::testing::kDifferenceNoiseFloor);
    CAPTURE(r.worst_param);
    CAPTURE(r.worst_index);
    CAPTURE(r.analytic);
    CAPTURE(r.numeric);
    CHECK(r.checked > 500);
    CHECK(r.max_rel_error < 1e-4);
  }
}

TEST_CASE("history order matters") {
  const auto& f = mini();
  const auto m = f.make();
  Tape tape(false);
  auto hist = f.train.back().history;
  const auto a = values(m->encode_history(tape, hist));
  std::swap(hist.front(), hist.back());
  REQUIRE(hist.front().location != hist.back().location);
  CHECK(a != values(m->encode_history(tape, hist)));
}

TEST_CASE("history is capped to the most recent visits") {
  const auto& f = mini();
  auto c = f.config;
  c.history_cap = 3;
  Pg2NetModel capped(c, f.locations, &f.categories, f.priors, 1);
  const auto full = f.make(Variant::kFull, 1);
  auto g = f.train.back();
  Tape tape(false);
  const auto a = capped.forward(tape, g);
  CHECK(a.attention.size() == 3);
  g.history.erase(g.history.begin(), g.history.end() - 3);
  const auto b = full->forward(tape, g);
  CHECK(values(a.samples[0].aux) == values(b.samples[0].aux));
}

TEST_CASE("variant parameter sets") {
  const auto& f = mini();
  auto names = [&](Variant v) {
    std::vector<std::string> out;
    for (const auto& p : f.make(v)->parameters()) out.push_back(p.name);
    return out;
  };
  const auto full = names(Variant::kFull);
  CHECK(std::find(full.begin(), full.end(), "attention") != full.end());
  const auto gnet = names(Variant::kGNet);
  CHECK(std::find(gnet.begin(), gnet.end(), "attention") == gnet.end());
  const auto pnet = names(Variant::kPNet);
  CHECK(std::find(pnet.begin(), pnet.end(), "recent.w_input") == pnet.end());
  CHECK(parse_variant("GNet") == Variant::kGNet);
  CHECK(parse_variant("no-node2vec") == Variant::kNoNode2vec);
  CHECK_THROWS_AS(parse_variant("big"), DataError);
  auto bad = f.config;
  bad.aux_weight = -1;
  CHECK_THROWS_AS(Pg2NetModel(bad, f.locations, &f.categories, f.priors, 1), DataError);
}

TEST_CASE("recurrent baseline: uniform at init and correct gradients") {
  const auto& f = mini();
  LstmBaseline b(4, 4, f.locations, &f.categories, 3);
  Tape tape(false);
  for (const auto& s : b.forward(tape, f.train.front()).samples) {
    for (double lp : s.log_probs.data()) CHECK(lp == doctest::Approx(std::log(0.2)).epsilon(1e-12));
  }
  randomize({{"h", b.head}, {"b", b.head_bias}}, 4, 0.5);
  const auto group = f.train.back();
  auto loss = [&](Tape& t) {
    const auto out = b.forward(t, group);
    return numeric::ops::scale(t, out.loss, 1.0 / static_cast<double>(out.trained));
  };
  const auto r = pg2net::testing::gradient_check(loss, b.parameters(), 1e-5, pg2net::testing::kDifferenceNoiseFloor);
  CAPTURE(r.worst_param);
  CHECK(r.max_rel_error < 1e-4);
}
