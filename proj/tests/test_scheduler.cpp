#include <doctest.h>

#include <cmath>

#include "wncs/plant.hpp"
#include "wncs/scheduler.hpp"

using namespace wncs;
using scheduler::Candidate;
using scheduler::SchedulerState;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

plant::SystemModel scalar_model(double a, double b) {
  plant::SystemModel m;
  m.A = scalar(a);
  m.B = scalar(b);
  m.W = scalar(0.02);
  m.Q = scalar(1.0);
  m.Y = scalar(1.0);
  m.eta = Vector::Constant(1, 0.1);
  m.zeta = 0.1;
  m.Omega = scalar(1.0);
  m.equilibrium = Vector::Zero(1);
  return m;
}

}  // namespace

TEST_SUITE("scheduler") {
  TEST_CASE("AoI update") {
    CHECK(scheduler::update_aoi(5, true, true) == 1);
    CHECK(scheduler::update_aoi(5, true, false) == 6);
    CHECK(scheduler::update_aoi(1, false, false) == 2);
    CHECK(scheduler::update_aoi(3, false, true) == 4);
    CHECK_THROWS_AS(scheduler::update_aoi(0, false, false), DomainError);
  }

  TEST_CASE("upsilon example") {
    const auto m = scalar_model(1.0, 1.0);
    const auto t = scheduler::stability_terms(m, scalar(1.0), scalar(1.0), scalar(2.0), scalar(1.0), scalar(0.0));
    CHECK(t.upsilon == doctest::Approx(1.0));
  }

  TEST_CASE("equal prediction and decoding covariances give ratio one") {
    const auto m = scalar_model(1.1, 1.0);
    const auto t = scheduler::stability_terms(m, scalar(1.0), scalar(0.5), scalar(0.7), scalar(0.7), scalar(0.02));
    CHECK(t.upsilon == 0.0);
    CHECK(t.ratio == 1.0);
  }

  TEST_CASE("gamma and upsilon by hand") {
    // Ac = 0.6: (0.6 - 0.1)² + Tr[BᵀZB]·Tr[Ψ] + (1.21 - 0.1)·1 + 0.02 = 0.25 + 1 + 1.11 + 0.02.
    const auto m = scalar_model(1.1, 1.0);
    const auto t = scheduler::stability_terms(m, scalar(1.0), scalar(0.5), scalar(1.0), scalar(0.0), scalar(0.02));
    CHECK(t.gamma == doctest::Approx(2.38));
    CHECK(t.upsilon == doctest::Approx(0.25));
    CHECK(t.ratio == doctest::Approx(2.38 / 0.25));
    CHECK(scheduler::clamp_unit(t.ratio) == 1.0);
  }

  TEST_CASE("matrix terms use traces") {
    const auto m = plant::mountain_car(0.0025, 3.0);
    const Matrix z = (Matrix(2, 2) << 2.0, 0.3, 0.3, 1.0).finished();
    const Matrix phi = (Matrix(1, 2) << 0.4, 0.8).finished();
    const Matrix psi = Vector(Vector::LinSpaced(2, 0.5, 1.5)).asDiagonal();
    const Matrix v = 0.1 * Matrix::Identity(2, 2);
    const auto t = scheduler::stability_terms(m, z, phi, psi, v, m.W);
    const Matrix bphi = m.B * phi;
    const Matrix ac = m.A - bphi;
    const Matrix sh = ac - 0.1 * Matrix::Identity(2, 2);
    const double gamma = (sh.transpose() * z * sh).trace() + (m.B.transpose() * z * m.B)(0, 0) * psi.trace() +
                         ((m.A.transpose() * z * m.A - 0.1 * z) * psi).trace() + (z * m.W).trace();
    const double upsilon = (bphi.transpose() * z * bphi * (psi - v)).trace();
    CHECK(t.gamma == doctest::Approx(gamma));
    CHECK(t.upsilon == doctest::Approx(upsilon));
    CHECK_THROWS_AS(scheduler::stability_terms(m, z, phi.transpose(), psi, v, m.W), DimensionError);
  }

  TEST_CASE("clamp") {
    CHECK(scheduler::clamp_unit(-3.0) == 0.0);
    CHECK(scheduler::clamp_unit(0.25) == 0.25);
    CHECK(scheduler::clamp_unit(7.0) == 1.0);
    CHECK(scheduler::clamp_unit(std::nan("")) == 1.0);
  }

  TEST_CASE("queue update examples") {
    auto s = SchedulerState::initial(1, 1000.0, 1.0, 1.0);
    CHECK(scheduler::update_queues(s, {0.0}, {0}).Q[0] == 0.0);
    s.Q[0] = 2.0;
    CHECK(scheduler::update_queues(s, {1.0}, {0}).Q[0] == 3.0);
    s.Q[0] = 0.5;
    CHECK(scheduler::update_queues(s, {0.0}, {1}).Q[0] == 0.0);
    s.Q[0] = 1.0;
    CHECK(scheduler::update_queues(s, {5.0}, {0}).Q[0] == 2.0);
    CHECK_THROWS_AS(scheduler::update_queues(s, {0.0, 0.0}, {0}), DimensionError);
  }

  TEST_CASE("queues stay nonnegative") {
    RngStream r(1);
    auto s = SchedulerState::initial(4, 10.0, 1.0, 1.0);
    for (int k = 0; k < 1000; ++k) {
      std::vector<double> c(4);
      std::vector<int> xi(4, 0);
      for (auto& v : c) v = 4.0 * r.uniform() - 2.0;
      xi[static_cast<std::size_t>(k % 4)] = r.uniform() < 0.5;
      s = scheduler::update_queues(s, c, xi);
      for (double q : s.Q) REQUIRE(q >= 0.0);
    }
  }

  TEST_CASE("CA selection examples") {
    auto one = SchedulerState::initial(1, 1000.0, 1.0, 1.0);
    one.Q[0] = 1.0;
    one.beta[0] = 5;
    const auto d = scheduler::ca_select(one, {Candidate{0.5}});
    REQUIRE(d.chosen);
    CHECK(*d.chosen == 0);
    CHECK(d.p[0] == 0.5);

    auto two = SchedulerState::initial(2, 1000.0, 1.0, 1.0);
    two.Q = {5.0, 1.0};
    two.beta = {3, 3};
    CHECK(*scheduler::ca_select(two, {Candidate{1.0}, Candidate{1.0}}).chosen == 0);

    const auto none = scheduler::ca_select(two, {Candidate{}, Candidate{}});
    CHECK_FALSE(none.chosen);
    CHECK(none.a == std::vector<int>{0, 0});
  }

  TEST_CASE("CA ties go to the lowest index and negative weights skip") {
    auto s = SchedulerState::initial(3, 1000.0, 1.0, 1.0);
    s.beta = {2, 2, 2};
    CHECK(*scheduler::ca_select(s, {Candidate{1.0}, Candidate{1.0}, Candidate{1.0}}).chosen == 0);
    // Fresh information is not worth 300 units of power.
    CHECK_FALSE(scheduler::ca_select(s, {Candidate{300.0}, Candidate{300.0}, Candidate{}}).chosen);
    s.beta = {2, 400, 2};
    CHECK(*scheduler::ca_select(s, {Candidate{300.0}, Candidate{300.0}, Candidate{}}).chosen == 1);
  }

  TEST_CASE("CA weight") {
    auto s = SchedulerState::initial(1, 10.0, 2.0, 3.0);
    s.Q[0] = 4.0;
    s.beta[0] = 6;
    CHECK(scheduler::ca_weight(s, 0, 9.0) == doctest::Approx(4.0 + 10.0 * 2.0 * std::log(7.0) - 10.0 * 3.0 * std::log(10.0)));
  }

  TEST_CASE("CA argmax is scale invariant in Q when V is zero") {
    RngStream r(2);
    for (int t = 0; t < 100; ++t) {
      auto s = SchedulerState::initial(5, 1.0, 1.0, 1.0);
      s.V = 0.0;
      std::vector<Candidate> c(5);
      for (std::size_t m = 0; m < 5; ++m) {
        s.Q[m] = 10.0 * r.uniform();
        c[m].p_req = r.uniform() < 0.8 ? std::optional<double>(100.0 * r.uniform()) : std::nullopt;
      }
      const auto base = scheduler::ca_select(s, c);
      for (double& q : s.Q) q *= 3.7;
      CHECK(scheduler::ca_select(s, c).chosen == base.chosen);
    }
  }

  TEST_CASE("round robin") {
    CHECK(*scheduler::rr_select(0, 6, 660.0).chosen == 0);
    CHECK(*scheduler::rr_select(7, 6, 660.0).chosen == 1);
    CHECK(*scheduler::rr_select(20, 21, 660.0).chosen == 20);
    const auto d = scheduler::rr_select(3, 4, 2.5);
    CHECK(d.p == std::vector<double>{0.0, 0.0, 0.0, 2.5});
    CHECK(d.a == std::vector<int>{0, 0, 0, 1});

    std::vector<int> counts(7, 0);
    for (std::int64_t k = 0; k < 1000; ++k) ++counts[*scheduler::rr_select(k, 7, 1.0).chosen];
    for (int c : counts) CHECK((c == 1000 / 7 || c == 1000 / 7 + 1));
  }

  TEST_CASE("decisions respect the one-uplink and power constraints") {
    RngStream r(3);
    auto s = SchedulerState::initial(6, 1000.0, 1.0, 1.0);
    for (int k = 0; k < 500; ++k) {
      std::vector<Candidate> c(6);
      for (std::size_t m = 0; m < 6; ++m) {
        s.beta[m] = 1 + static_cast<std::int64_t>(1000 * r.uniform());
        if (r.uniform() < 0.7) c[m].p_req = 1000.0 * r.uniform();
      }
      const auto d = scheduler::ca_select(s, c);
      int total = 0;
      for (std::size_t m = 0; m < 6; ++m) {
        total += d.a[m];
        CHECK(d.p[m] >= 0.0);
        CHECK(d.p[m] <= 1000.0);
      }
      CHECK(total <= 1);
    }
  }
}
