#include <doctest.h>

#include <cstring>
#include <random>
#include <vector>

#include "ivpf/simd/injection_kernels.hpp"
#include "ivpf/split_circuit.hpp"

using namespace ivpf::simd;

namespace {

struct CpData {
  std::vector<double> p, q, vr, vi;
  std::vector<std::vector<double>> out = std::vector<std::vector<double>>(8);

  explicit CpData(std::size_t n, std::uint64_t seed) : p(n), q(n), vr(n), vi(n) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pq(-3, 3), v(-2, 2);
    for (std::size_t k = 0; k < n; ++k) {
      p[k] = pq(rng);
      q[k] = pq(rng);
      vr[k] = v(rng);
      vi[k] = v(rng);
    }
    for (auto& o : out) o.assign(n, 0.0);
  }

  ConstantPowerBatch batch() {
    return {p, q, vr, vi, out[0], out[1], out[2], out[3], out[4], out[5], out[6], out[7]};
  }
};

struct PolyData {
  std::array<std::vector<double>, 6> gr, gi;
  std::vector<double> vr, vi;
  std::vector<std::vector<double>> out = std::vector<std::vector<double>>(6);

  PolyData(std::size_t n, std::uint64_t seed) : vr(n), vi(n) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> c(-1, 1), v(-2, 2);
    for (int k = 0; k < 6; ++k) {
      gr[k].resize(n);
      gi[k].resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        gr[k][i] = c(rng);
        gi[k][i] = c(rng);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      vr[i] = v(rng);
      vi[i] = v(rng);
    }
    for (auto& o : out) o.assign(n, 0.0);
  }

  PolynomialBatch batch() {
    PolynomialBatch b;
    for (int k = 0; k < 6; ++k) {
      b.g_real[k] = gr[k];
      b.g_imag[k] = gi[k];
    }
    b.vr = vr;
    b.vi = vi;
    b.i_r = out[0];
    b.i_i = out[1];
    b.dir_dvr = out[2];
    b.dir_dvi = out[3];
    b.dii_dvr = out[4];
    b.dii_dvi = out[5];
    return b;
  }
};

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<Isa> vector_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (isa_supported(isa)) out.push_back(isa);
  }
  return out;
}

}  // namespace

TEST_CASE("scalar kernel is always available and active kernels resolve") {
  CHECK(isa_supported(Isa::Scalar));
  CHECK(kernels(Isa::Scalar).isa == Isa::Scalar);
  CHECK(isa_supported(active_kernels().isa));
}

TEST_CASE("scalar kernel reproduces the per-device formulas") {
  CpData d(37, 5);
  CHECK(kernels(Isa::Scalar).constant_power(d.batch(), ivpf::kVoltageGuard) == kNoCollapse);
  for (std::size_t k = 0; k < d.p.size(); ++k) {
    const ivpf::InjectionEval e = ivpf::eval_pq_load(d.p[k], d.q[k], d.vr[k], d.vi[k]);
    CHECK(d.out[0][k] == e.i_r);
    CHECK(d.out[1][k] == e.i_i);
    CHECK(d.out[2][k] == e.dir_dvr);
    CHECK(d.out[5][k] == e.dii_dvi);
  }
}

TEST_CASE("vector kernels are bit-identical to scalar across lengths") {
  const auto isas = vector_isas();
  if (isas.empty()) {
    MESSAGE("no vector ISA on this machine; scalar only");
    return;
  }
  for (Isa isa : isas) {
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 31u, 64u, 257u}) {
      CAPTURE(n);
      CpData s(n, 11 + n), v(n, 11 + n);
      const std::size_t cs = kernels(Isa::Scalar).constant_power(s.batch(), ivpf::kVoltageGuard);
      const std::size_t cv = kernels(isa).constant_power(v.batch(), ivpf::kVoltageGuard);
      CHECK(cs == cv);
      for (int o = 0; o < 8; ++o) CHECK(bit_equal(s.out[o], v.out[o]));

      PolyData ps(n, 3 + n), pv(n, 3 + n);
      kernels(Isa::Scalar).polynomial(ps.batch());
      kernels(isa).polynomial(pv.batch());
      for (int o = 0; o < 6; ++o) CHECK(bit_equal(ps.out[o], pv.out[o]));
    }
  }
}

TEST_CASE("collapse index is the first offending lane in every variant") {
  std::vector<Isa> all{Isa::Scalar};
  for (Isa isa : vector_isas()) all.push_back(isa);
  for (Isa isa : all) {
    for (std::size_t pos : {0u, 3u, 4u, 6u, 10u}) {
      CpData d(11, 1);
      d.vr[pos] = 0.0;
      d.vi[pos] = 1e-6;
      if (pos + 2 < d.vr.size()) {
        d.vr[pos + 2] = 0.0;
        d.vi[pos + 2] = 0.0;
      }
      CHECK(kernels(isa).constant_power(d.batch(), ivpf::kVoltageGuard) == pos);
    }
  }
}

TEST_CASE("unavailable ISA is rejected") {
  for (Isa isa : {Isa::Avx2, Isa::Neon}) {
    if (!isa_supported(isa)) CHECK_THROWS_AS(kernels(isa), std::invalid_argument);
  }
}
