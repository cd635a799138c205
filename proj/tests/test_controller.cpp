#include <doctest.h>

#include <cmath>
#include <numbers>

#include "wncs/controller.hpp"
#include "wncs/mathkit.hpp"

using namespace wncs;
using controller::GaussianPolicy;
using controller::Objective;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }
Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

plant::SystemModel scalar_model(double a, double noise = 0.0) {
  plant::SystemModel m;
  m.A = Matrix::Constant(1, 1, a);
  m.B = Matrix::Ones(1, 1);
  m.W = Matrix::Constant(1, 1, noise);
  m.Q = Matrix::Identity(1, 1);
  m.Y = Matrix::Identity(1, 1);
  m.eta = v1(0.1);
  m.Omega = Matrix::Identity(1, 1);
  m.equilibrium = v1(0.0);
  m.validate();
  return m;
}

GaussianPolicy scalar_policy(double w, double bias, double log_std, double bound = 1e6) {
  GaussianPolicy p = GaussianPolicy::zeros(1, 1, -bound, bound, log_std);
  p.mean_weights << w, bias;
  return p;
}

}  // namespace

TEST_SUITE("controller") {
  TEST_CASE("reward examples") {
    const auto m = plant::mountain_car(0.0025, 3.0);
    CHECK(controller::reward(m, v2(1.0, 0.0), v1(0.0)) == doctest::Approx(-1.0));
    CHECK(controller::reward(m, v2(2.0, 1.0), v1(1.0)) == doctest::Approx(-6.0));
    CHECK(controller::reward(m, v2(0.05, 0.0), v1(0.0)) == 0.0);
    CHECK(controller::reward(m, v2(0.05, 0.0), v1(0.0), Objective::kClassic) == doctest::Approx(-0.0025));
  }

  TEST_CASE("policy sampling") {
    GaussianPolicy p = GaussianPolicy::zeros(2, 1, -10.0, 10.0);
    p.mean_weights << 1.0, 2.0, 100.0;
    RngStream r(1);
    CHECK(controller::policy_sample(p, v2(0.0, 0.0), r, true)[0] == 10.0);
    p.mean_weights << 1.0, 2.0, 0.5;
    CHECK(controller::policy_sample(p, v2(1.0, 1.0), r, true)[0] == doctest::Approx(3.5));

    RngStream a(9), b(9);
    for (int i = 0; i < 20; ++i) {
      const Vector ua = controller::policy_sample(p, v2(0.1, -0.2), a, false);
      CHECK(ua == controller::policy_sample(p, v2(0.1, -0.2), b, false));
      CHECK(std::abs(ua[0]) <= 10.0);
    }
  }

  TEST_CASE("log density") {
    const auto p = scalar_policy(0.0, 0.0, 0.0);
    CHECK(controller::log_prob(p, v1(3.0), v1(0.0)) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)));
    const auto q = scalar_policy(2.0, 1.0, std::log(0.5));
    const double z = (2.0 - 3.0) / 0.5;
    CHECK(controller::log_prob(q, v1(1.0), v1(2.0)) ==
          doctest::Approx(-0.5 * z * z - std::log(0.5) - 0.5 * std::log(2.0 * std::numbers::pi)));
  }

  TEST_CASE("parameter vector round trip") {
    GaussianPolicy p = GaussianPolicy::zeros(2, 1, -1.0, 1.0, -0.5);
    p.mean_weights << 1.0, 2.0, 3.0;
    const Vector theta = p.parameters();
    CHECK(theta == (Vector(4) << 1.0, 2.0, 3.0, -0.5).finished());
    GaussianPolicy q = GaussianPolicy::zeros(2, 1, -1.0, 1.0);
    q.set_parameters(theta);
    CHECK(q.mean_weights == p.mean_weights);
    CHECK(q.log_std == p.log_std);
    CHECK_THROWS_AS(q.set_parameters(Vector::Zero(3)), DimensionError);
  }

  TEST_CASE("reward to go") {
    const auto g = controller::reward_to_go({1.0, 1.0, 1.0}, 0.5);
    REQUIRE(g.size() == 3);
    CHECK(g[0] == doctest::Approx(1.75));
    CHECK(g[1] == doctest::Approx(1.5));
    CHECK(g[2] == doctest::Approx(1.0));
    CHECK(controller::reward_to_go({}, 0.9).empty());
  }

  TEST_CASE("rollout inside the band earns nothing") {
    plant::MountainCarOptions o;
    o.plant_noise_var = 0.0;
    const auto m = plant::mountain_car(0.0025, 3.0, o);
    RngStream r(3);
    const auto ep = controller::rollout(m, GaussianPolicy::zeros(2, 1, -10, 10), v2(0.0, 0.0), 50,
                                        Objective::kTail, r, true);
    CHECK(ep.rewards.size() == 50);
    CHECK(ep.undiscounted_return() == 0.0);
  }

  TEST_CASE("rollout absorbs at the state box") {
    const auto m = scalar_model(2.0);
    RngStream r(4);
    const auto ep = controller::rollout(m, scalar_policy(0.0, 0.0, 0.0), v1(3.0), 10, Objective::kTail, r,
                                        true, 10.0);
    // 3, 6, 12: the third state is outside and the rest of the horizon pays -144.
    CHECK(ep.states.size() == 2);
    CHECK(ep.actions.size() == 2);
    REQUIRE(ep.rewards.size() == 10);
    CHECK(ep.rewards[1] == doctest::Approx(-36.0));
    for (std::size_t t = 2; t < 10; ++t) CHECK(ep.rewards[t] == doctest::Approx(-144.0));
  }

  TEST_CASE("gradient matches finite differences of the surrogate") {
    const auto m = scalar_model(1.0);
    GaussianPolicy p = scalar_policy(0.4, -0.2, std::log(0.7));
    RngStream r(5);
    std::vector<controller::Episode> batch;
    for (int e = 0; e < 30; ++e) {
      RngStream er = r.derive({static_cast<std::uint64_t>(e)});
      batch.push_back(controller::rollout(m, p, v1(0.5 + 0.1 * e), 1, Objective::kClassic, er));
    }
    const Vector grad = controller::policy_gradient(p, batch, 0.9, false);

    // Frozen advantages: reward minus the batch mean.
    double mean = 0.0;
    for (const auto& ep : batch) mean += ep.rewards[0];
    mean /= static_cast<double>(batch.size());
    auto surrogate = [&](const Vector& theta) {
      GaussianPolicy q = p;
      q.set_parameters(theta);
      double s = 0.0;
      for (const auto& ep : batch) s += controller::log_prob(q, ep.states[0], ep.actions[0]) * (ep.rewards[0] - mean);
      return s / static_cast<double>(batch.size());
    };
    const Vector theta = p.parameters();
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Vector plus = theta, minus = theta;
      plus[i] += 1e-6;
      minus[i] -= 1e-6;
      const double fd = (surrogate(plus) - surrogate(minus)) / 2e-6;
      CHECK(std::abs(fd - grad[i]) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }

  TEST_CASE("gradient estimate agrees with the analytic one-step gradient") {
    // J = -(x0^2 + (w x0 + b)^2 + sigma^2) for one classic step without clipping.
    const auto m = scalar_model(1.0);
    const double w = 0.5, bias = 0.3, sigma = 0.8, x0 = 1.0;
    const GaussianPolicy p = scalar_policy(w, bias, std::log(sigma));
    RngStream r(6);
    std::vector<controller::Episode> batch;
    for (int e = 0; e < 40000; ++e) {
      RngStream er = r.derive({static_cast<std::uint64_t>(e)});
      batch.push_back(controller::rollout(m, p, v1(x0), 1, Objective::kClassic, er));
    }
    const Vector grad = controller::policy_gradient(p, batch, 0.9, false);
    const double mu = w * x0 + bias;
    CHECK(grad[0] == doctest::Approx(-2.0 * mu * x0).epsilon(0.05));
    CHECK(grad[1] == doctest::Approx(-2.0 * mu).epsilon(0.05));
    CHECK(grad[2] == doctest::Approx(-2.0 * sigma * sigma).epsilon(0.05));
  }

  TEST_CASE("scalar LQR gain is the golden ratio conjugate") {
    const auto g = controller::lqr_policy(scalar_model(1.0));
    CHECK(g.P(0, 0) == doctest::Approx((1.0 + std::sqrt(5.0)) / 2.0));
    CHECK(g.K(0, 0) == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0));
    CHECK(g.act(v1(100.0))[0] == -10.0);
  }

  TEST_CASE("mountain car LQR stabilises and its value decreases") {
    const auto m = plant::mountain_car(0.0025, 3.0);
    const auto g = controller::lqr_policy(m);
    const Matrix closed = m.A - m.B * g.K;
    CHECK(mathkit::spectral_radius(closed) < 1.0);
    RngStream r(7);
    for (int i = 0; i < 100; ++i) {
      const Vector x = r.normal_vector(2);
      const Vector next = closed * x;
      CHECK(next.dot(g.P * next) < x.dot(g.P * x));
    }
  }

  TEST_CASE("feedback gain from logged samples") {
    const auto m = plant::mountain_car(0.0025, 3.0);
    const auto g = controller::lqr_policy(m);
    RngStream r(8);
    std::vector<Vector> xs, us, zeros;
    for (int i = 0; i < 200; ++i) {
      xs.push_back(r.normal_vector(2));
      us.push_back(-g.K * xs.back());
      zeros.push_back(Vector::Zero(1));
    }
    CHECK((controller::feedback_gain(xs, us).phi + g.K).norm() < 1e-5);
    CHECK(controller::feedback_gain(xs, zeros).phi.norm() < 1e-12);

    std::vector<Vector> wide, clipped;
    for (int i = 0; i < 200; ++i) {
      wide.push_back(4.0 * r.normal_vector(2));
      clipped.push_back(g.act(wide.back()));
    }
    const Matrix phi = controller::feedback_gain(wide, clipped).phi;
    CHECK((phi + g.K).norm() <= 0.15 * g.K.norm());

    xs.resize(19);
    us.resize(19);
    CHECK_THROWS_AS(controller::feedback_gain(xs, us), DomainError);
  }

  TEST_CASE("control law dispatch") {
    const auto m = plant::mountain_car(0.0025, 3.0);
    const auto g = controller::lqr_policy(m);
    const controller::ControlLaw lqr(g);
    CHECK(lqr.act(v2(0.1, 0.2)) == g.act(v2(0.1, 0.2)));
    GaussianPolicy p = GaussianPolicy::zeros(2, 1, -10, 10);
    p.mean_weights << -1.0, -2.0, 0.0;
    const controller::ControlLaw rl(p);
    CHECK(rl.act(v2(1.0, 1.0))[0] == doctest::Approx(-3.0));
    CHECK(rl.action_dim() == 1);
  }

  TEST_CASE("training is deterministic per seed") {
    const auto m = plant::mountain_car(0.0025, 3.0);
    controller::TrainConfig cfg;
    cfg.epochs = 3;
    cfg.episodes_per_epoch = 10;
    cfg.horizon = 30;
    const auto a = controller::train_policy(m, cfg);
    const auto b = controller::train_policy(m, cfg);
    CHECK(a.policy.parameters() == b.policy.parameters());
    REQUIRE(a.curve.size() == 3);
    CHECK(a.curve[2].mean_return == b.curve[2].mean_return);
    cfg.seed = 2;
    CHECK(controller::train_policy(m, cfg).policy.parameters() != a.policy.parameters());
  }

  TEST_CASE("divergent training reports its curve") {
    controller::TrainConfig cfg;
    cfg.epochs = 5;
    cfg.episodes_per_epoch = 4;
    cfg.horizon = 300;
    cfg.x0 = v1(1.0);
    cfg.state_bound = 0.0;
    try {
      controller::train_policy(scalar_model(30.0), cfg);
      FAIL("expected divergence");
    } catch (const controller::TrainingDiverged& e) {
      REQUIRE(!e.curve().empty());
      CHECK(!std::isfinite(e.curve().back().mean_return));
    }
  }

  TEST_CASE("training config validation") {
    controller::TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.discount = 1.0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = {};
    cfg.state_bound = -1.0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
  }
}
