#include <doctest.h>

#include <cmath>
#include <random>
#include <chrono>
#include <set>
#include <sstream>

#include "uvls/learn/dqn.hpp"
#include "uvls/learn/mlp.hpp"
#include "uvls/learn/replay.hpp"
#include "uvls/learn/tabular.hpp"
#include "uvls/learn/transition.hpp"

using namespace uvls;
using namespace uvls::learn;

namespace {

Transition make(double r, bool terminal, Origin o = Origin::kRandom, std::vector<double> s = {0.0},
                std::vector<double> next = {0.0}, std::uint32_t a = 0) {
  return Transition{std::move(s), env::ActionIndex{a}, r, std::move(next), terminal, o};
}

Eigen::MatrixXd random_batch(std::mt19937_64& rng, std::size_t in, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd x(in, n);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  return x;
}

// Central differences over every parameter; max relative error.
double gradient_error(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> width(2, 7), depth(1, 3), batch(1, 6);
  std::vector<std::size_t> sizes{width(rng)};
  for (std::size_t d = depth(rng); d > 0; --d) sizes.push_back(width(rng));
  sizes.push_back(width(rng));
  Mlp net = Mlp::glorot(sizes, rng);
  for (auto& l : net.layers()) {
    std::normal_distribution<double> g(0.0, 0.3);
    for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b(i) = g(rng);
  }
  const std::size_t n = batch(rng);
  const auto x = random_batch(rng, sizes.front(), n);
  std::uniform_int_distribution<std::uint32_t> act(0, static_cast<std::uint32_t>(sizes.back() - 1));
  std::normal_distribution<double> g(0.0, 2.0);
  std::vector<std::uint32_t> actions;
  std::vector<double> targets;
  for (std::size_t k = 0; k < n; ++k) actions.push_back(act(rng)), targets.push_back(g(rng));

  const auto grad = loss_gradient(net, x, actions, targets);
  Mlp gnet = net;
  for (std::size_t l = 0; l < grad.layers.size(); ++l) gnet.layers()[l] = grad.layers[l];
  const auto analytic = gnet.flat();
  auto theta = net.flat();
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t p = 0; p < theta.size(); ++p) {
    const double keep = theta[p];
    theta[p] = keep + h;
    net.set_flat(theta);
    const double up = loss_value(net, x, actions, targets);
    theta[p] = keep - h;
    net.set_flat(theta);
    const double down = loss_value(net, x, actions, targets);
    theta[p] = keep;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::abs(numeric), std::abs(analytic[p]), 1e-3});
    worst = std::max(worst, std::abs(numeric - analytic[p]) / scale);
  }
  net.set_flat(theta);
  return worst;
}

ToyMdp two_state() {
  ToyMdp m;
  m.n_states = 2;
  m.n_actions = 2;
  m.outcomes = {{{{1.0, 0, 1.0}}, {{1.0, 1, 0.0}}}, {{{1.0, 0, -1.0}}, {{1.0, 1, 2.0}}}};
  return m;
}

}  // namespace

TEST_CASE("zero network outputs zeros; default layer shapes give 16 outputs") {
  const Mlp zero = Mlp::zeros({120, 60, 30, 15, 16});
  std::vector<double> s(120, 0.3);
  const auto q = zero.forward(s);
  CHECK(q.size() == 16);
  CHECK(q.cwiseAbs().maxCoeff() == 0.0);
  std::mt19937_64 rng(1);
  const Mlp net = Mlp::glorot({120, 60, 30, 15, 16}, rng);
  CHECK(net.forward(s).size() == 16);
  CHECK(net.parameter_count() == 120 * 60 + 60 + 60 * 30 + 30 + 30 * 15 + 15 + 15 * 16 + 16);
}

TEST_CASE("single identity layer passes its input prefix through") {
  Layer l{Eigen::MatrixXd::Identity(3, 5), Eigen::VectorXd::Zero(3)};
  const Mlp net({l});
  const std::vector<double> x{1.5, -2.0, 0.25, 9.0, 9.0};
  const auto q = net.forward(x);
  CHECK(q(0) == 1.5);
  CHECK(q(1) == -2.0);
  CHECK(q(2) == 0.25);
}

TEST_CASE("mismatched layer shapes are rejected") {
  Layer a{Eigen::MatrixXd::Zero(3, 4), Eigen::VectorXd::Zero(3)};
  Layer b{Eigen::MatrixXd::Zero(2, 5), Eigen::VectorXd::Zero(2)};
  CHECK_THROWS(Mlp({a, b}));
}

TEST_CASE("analytic gradients match central differences") {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) worst = std::max(worst, gradient_error(rng));
  CHECK(worst < 1e-4);
}

TEST_CASE("zero residual gives zero gradient") {
  std::mt19937_64 rng(3);
  const Mlp net = Mlp::glorot({4, 5, 3}, rng);
  const auto x = random_batch(rng, 4, 6);
  std::vector<std::uint32_t> actions{0, 1, 2, 0, 1, 2};
  const auto q = net.forward_batch(x);
  std::vector<double> targets;
  for (int k = 0; k < 6; ++k) targets.push_back(q(actions[k], k));
  const auto g = loss_gradient(net, x, actions, targets);
  CHECK(g.loss == 0.0);
  for (const auto& l : g.layers) {
    CHECK(l.w.cwiseAbs().maxCoeff() == 0.0);
    CHECK(l.b.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("linear network, one sample: gradient is residual times input") {
  Layer l{Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(2)};
  l.w << 0.5, -1.0, 2.0, 0.1, 0.2, 0.3;
  l.b << 0.2, -0.1;
  const Mlp net({l});
  Eigen::MatrixXd x(3, 1);
  x << 1.0, 2.0, -1.0;
  const std::vector<std::uint32_t> a{1};
  const std::vector<double> y{4.0};
  const double q = 0.1 * 1.0 + 0.2 * 2.0 - 0.3 * 1.0 - 0.1;
  const double residual = q - 4.0;
  const auto g = loss_gradient(net, x, a, y);
  CHECK(g.layers[0].w.row(0).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 3; ++i) CHECK(g.layers[0].w(1, i) == doctest::Approx(residual * x(i, 0)));
  CHECK(g.layers[0].b(1) == doctest::Approx(residual));
  CHECK(g.loss == doctest::Approx(0.5 * residual * residual));
}

TEST_CASE("non-finite targets abort with a numerical error") {
  const Mlp net = Mlp::zeros({2, 2});
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 1);
  const std::vector<std::uint32_t> a{0};
  const std::vector<double> y{std::nan("")};
  CHECK_THROWS_AS(loss_gradient(net, x, a, y), NumericalError);
}

TEST_CASE("one small SGD step does not increase the batch loss") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    Mlp net = Mlp::glorot({6, 8, 4, 3}, rng);
    const auto x = random_batch(rng, 6, 10);
    std::vector<std::uint32_t> a;
    std::vector<double> y;
    for (int k = 0; k < 10; ++k) a.push_back(k % 3), y.push_back(k * 0.3 - 1.0);
    const double before = loss_value(net, x, a, y);
    Optimizer opt(OptimizerKind::kSgd, 1e-6);
    opt.apply(net, loss_gradient(net, x, a, y));
    CHECK(loss_value(net, x, a, y) <= before);
  }
}

TEST_CASE("td targets") {
  const Mlp net = Mlp::zeros({1, 2});
  CHECK(td_target(make(-3.2, true), net, 0.95) == -3.2);
  Layer l{Eigen::MatrixXd::Zero(2, 1), Eigen::VectorXd::Zero(2)};
  l.b << 2.0, -1.0;
  const Mlp fixed({l});
  CHECK(td_target(make(1.0, false), fixed, 0.95) == doctest::Approx(2.9));
  CHECK(td_target(make(1.0, false), fixed, 0.0) == 1.0);
}

TEST_CASE("double targets: selector picks a', evaluator scores it") {
  auto bias_net = [](double a, double b) {
    Layer l{Eigen::MatrixXd::Zero(2, 1), Eigen::VectorXd::Zero(2)};
    l.b << a, b;
    return Mlp({l});
  };
  const Mlp eval = bias_net(2.0, -1.0);
  const Mlp pick = bias_net(0.0, 5.0);
  const Transition t = make(1.0, false);
  const Transition* batch[] = {&t};
  CHECK(td_targets(batch, eval, 0.95, &pick)[0] == doctest::Approx(1.0 - 0.95));
  CHECK(td_targets(batch, eval, 0.95, &eval)[0] == td_targets(batch, eval, 0.95)[0]);
  const Transition end = make(-4.0, true);
  const Transition* last[] = {&end};
  CHECK(td_targets(last, eval, 0.95, &pick)[0] == -4.0);
}

TEST_CASE("update schedule options validate and round trip") {
  TrainConfig c;
  c.double_q = true;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c.target_sync = 50;
  c.updates_per_step = 3;
  CHECK_NOTHROW(validate(c));
  const auto back = train_config_from_json(to_json(c));
  CHECK(back.double_q);
  CHECK(back.updates_per_step == 3);
  CHECK(back.target_sync == 50);
  c.updates_per_step = 0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
}

TEST_CASE("terminal transitions never read the next state") {
  std::mt19937_64 rng(4);
  const Mlp net = Mlp::glorot({3, 4, 2}, rng);
  std::vector<Transition> ts;
  const double nan = std::nan("");
  for (int k = 0; k < 50; ++k) {
    ts.push_back(make(k * 0.1, true, Origin::kRandom, {0.1, 0.2, 0.3}, {nan, nan}));
    ts.push_back(make(k * 0.2, false, Origin::kRandom, {0.1, 0.2, 0.3}, {0.3, -0.1, 0.2}));
  }
  std::vector<const Transition*> batch;
  for (const auto& t : ts) batch.push_back(&t);
  const auto y = td_targets(batch, net, 0.9);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    CHECK(std::isfinite(y[i]));
    CHECK(y[i] == doctest::Approx(td_target(ts[i], net, 0.9)));
    if (ts[i].terminal) CHECK(y[i] == ts[i].reward);
  }
}

TEST_CASE("epsilon schedule") {
  TrainConfig c;
  CHECK(epsilon_after(c, 3500) == doctest::Approx(0.0301).epsilon(2e-3));
  CHECK(epsilon_after(c, 3500) == doctest::Approx(std::pow(0.999, 3500)).epsilon(1e-10));
  CHECK(epsilon_after(c, 0) == 1.0);
}

TEST_CASE("epsilon-greedy extremes") {
  std::mt19937_64 rng(77);
  Layer l{Eigen::MatrixXd::Zero(4, 1), Eigen::VectorXd::Zero(4)};
  l.b << 0.0, 3.0, 3.0, 1.0;
  const Mlp net({l});
  const std::vector<double> s{0.0};
  CHECK(act(net, s).index == 1);  // tie goes to the lower index
  for (int k = 0; k < 100; ++k) CHECK(epsilon_greedy(net, s, 0.0, rng).index == 1);

  const int draws = 100000;
  std::vector<int> counts(4, 0);
  for (int k = 0; k < draws; ++k) ++counts[epsilon_greedy(net, s, 1.0, rng).index];
  const double p = 0.25, sigma = std::sqrt(draws * p * (1 - p));
  for (int c : counts) CHECK(std::abs(c - draws * p) <= 3 * sigma);
}

TEST_CASE("argmax is invariant to a common output bias shift") {
  std::mt19937_64 rng(8);
  Mlp net = Mlp::glorot({5, 6, 4}, rng);
  std::normal_distribution<double> g;
  for (int k = 0; k < 50; ++k) {
    std::vector<double> s(5);
    for (auto& v : s) v = g(rng);
    const auto before = act(net, s);
    Mlp shifted = net;
    shifted.layers().back().b.array() += 7.25;
    CHECK(act(shifted, s) == before);
    CHECK(act(net, s) == before);
  }
}

TEST_CASE("replay buffer capacities and FIFO eviction") {
  ReplayBuffer buf(3, 5);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(buf.sample(1, rng), std::logic_error);
  for (int k = 0; k < 10; ++k) buf.add(make(k, false, Origin::kRandom));
  for (int k = 0; k < 4; ++k) buf.add(make(100 + k, false, Origin::kExpert));
  CHECK(buf.random_size() == 5);
  CHECK(buf.expert_size() == 3);
  CHECK(buf.at(0).reward == 101);
  CHECK(buf.at(3).reward == 5);
  CHECK(buf.at(7).reward == 9);
  const auto all = buf.sample(2000, rng);
  CHECK(all.size() == 8);
  std::set<const Transition*> unique(all.begin(), all.end());
  CHECK(unique.size() == 8);
}

TEST_CASE("random operation sequences respect capacities") {
  std::mt19937_64 rng(12);
  ReplayBuffer buf(7, 11);
  std::bernoulli_distribution expert(0.3);
  std::vector<double> ex, rd;
  for (int k = 0; k < 500; ++k) {
    const bool e = expert(rng);
    buf.add(make(k, false, e ? Origin::kExpert : Origin::kRandom));
    (e ? ex : rd).push_back(k);
    CHECK(buf.expert_size() <= 7);
    CHECK(buf.random_size() <= 11);
  }
  for (std::size_t i = 0; i < buf.expert_size(); ++i) CHECK(buf.at(i).reward == ex[ex.size() - buf.expert_size() + i]);
  for (std::size_t i = 0; i < buf.random_size(); ++i) {
    CHECK(buf.at(buf.expert_size() + i).reward == rd[rd.size() - buf.random_size() + i]);
  }
}

TEST_CASE("expert share of minibatches is binomial") {
  ReplayBuffer buf;
  for (int k = 0; k < 2000; ++k) buf.add(make(0, false, Origin::kExpert));
  for (int k = 0; k < 6000; ++k) buf.add(make(0, false, Origin::kRandom));
  std::mt19937_64 rng(31);
  const int reps = 200;
  double total = 0.0;
  for (int r = 0; r < reps; ++r) {
    const auto b = buf.sample(2000, rng);
    CHECK(b.size() == 2000);
    total += static_cast<double>(std::count_if(b.begin(), b.end(), [](const Transition* t) {
      return t->origin == Origin::kExpert;
    }));
  }
  const double mean_share = total / (reps * 2000.0);
  // Hypergeometric variance per draw is below the binomial one.
  const double sigma = std::sqrt(0.25 * 0.75 / (reps * 2000.0));
  CHECK(std::abs(mean_share - 0.25) <= 3 * sigma);
}

TEST_CASE("transition records round trip") {
  std::vector<Transition> ts{make(1.5, false, Origin::kExpert, {0.1, 0.2}, {0.3, 0.4}, 5),
                             make(-1200, true, Origin::kRandom, {1e-17, -0.5}, {-1, -1}, 0)};
  std::stringstream io;
  write_transitions(io, ts);
  const auto back = read_transitions(io);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].state == ts[i].state);
    CHECK(back[i].next_state == ts[i].next_state);
    CHECK(back[i].reward == ts[i].reward);
    CHECK(back[i].action == ts[i].action);
    CHECK(back[i].terminal == ts[i].terminal);
    CHECK(back[i].origin == ts[i].origin);
  }
}

TEST_CASE("checkpoint round trip keeps the greedy policy") {
  std::mt19937_64 rng(10);
  Checkpoint c;
  c.params = Mlp::glorot({120, 60, 30, 15, 16}, rng);
  c.params.set_input_scale(100.0);
  c.epsilon = 0.5;
  c.episode = 12;
  const auto back = checkpoint_from_json(nlohmann::json::parse(to_json(c).dump()));
  CHECK(back.params.flat() == c.params.flat());
  CHECK(back.params.input_scale() == 100.0);
  std::normal_distribution<double> g(0.0, 0.1);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> s(120);
    for (auto& v : s) v = g(rng);
    CHECK(act(back.params, s) == act(c.params, s));
  }
}

TEST_CASE("tabular Q-learning reaches the value-iteration fixed point") {
  const auto mdp = two_state();
  const auto vi = value_iteration(mdp, 0.9);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto q = tabular_q_reference(mdp, 0.5, 0.9, 2000, seed);
    CHECK(max_abs_difference(q, vi) < 1e-6);
  }
}

TEST_CASE("tabular edge cases: myopic and frozen") {
  const auto mdp = two_state();
  const auto q0 = tabular_q_reference(mdp, 0.5, 0.0, 500, 1);
  CHECK(q0[0][0] == doctest::Approx(1.0));
  CHECK(q0[1][1] == doctest::Approx(2.0));
  CHECK(q0[1][0] == doctest::Approx(-1.0));
  const auto frozen = tabular_q_reference(mdp, 0.0, 0.9, 50, 1);
  for (const auto& row : frozen) {
    for (double v : row) CHECK(v == 0.0);
  }
}

TEST_CASE("greedy act latency on the default network") {
  std::mt19937_64 rng(6);
  const Mlp net = Mlp::glorot({120, 60, 30, 15, 16}, rng);
  std::vector<double> s(120, 0.05);
  double total = 0.0;
  for (int k = 0; k < 2000; ++k) total += std::chrono::duration<double>(act_timed(net, s).latency).count();
  CHECK(total / 2000 < 0.05);
}
