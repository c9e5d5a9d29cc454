#include <doctest.h>

#include <cstring>
#include <vector>

#include "neuroeco/ecology.hpp"
#include "neuroeco/kernels.hpp"
#include "neuroeco/rng.hpp"

using namespace neuroeco;
namespace k = neuroeco::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed, double lo = -10, double hi = 10) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = Draws(seed, i, 0).uniform(lo, hi);
    return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Restores automatic kernel selection when a test ends.
struct IsaGuard {
    ~IsaGuard() { k::select(k::Isa::automatic); }
};

}  // namespace

TEST_CASE("scalar row_sum3 wraps at both ends") {
    const std::vector<double> src{1, 2, 3, 4};
    std::vector<double> dst(4);
    k::scalar().row_sum3(src.data(), dst.data(), 4);
    CHECK(dst == std::vector<double>{4 + 1 + 2, 1 + 2 + 3, 2 + 3 + 4, 3 + 4 + 1});
}

TEST_CASE("elementwise kernels are bit-identical across ISAs") {
    const auto* v = k::avx2();
    if (!v) {
        MESSAGE("AVX2 unavailable; equivalence not exercised");
        return;
    }
    for (std::size_t n : {3u, 4u, 5u, 7u, 8u, 9u, 31u, 64u, 1023u}) {
        CAPTURE(n);
        const auto a = random_vec(n, 1), b = random_vec(n, 2), c = random_vec(n, 3);
        std::vector<double> s(n), w(n);
        k::scalar().row_sum3(a.data(), s.data(), n);
        v->row_sum3(a.data(), w.data(), n);
        CHECK(bit_equal(s, w));

        k::scalar().col_sum3_scale(a.data(), b.data(), c.data(), s.data(), n, 0.1);
        v->col_sum3_scale(a.data(), b.data(), c.data(), w.data(), n, 0.1);
        CHECK(bit_equal(s, w));

        s = a;
        w = a;
        k::scalar().add_scaled(s.data(), b.data(), 0.37, n);
        v->add_scaled(w.data(), b.data(), 0.37, n);
        CHECK(bit_equal(s, w));
    }
}

TEST_CASE("reductions agree across ISAs within rounding") {
    const auto* v = k::avx2();
    if (!v) return;
    for (std::size_t n : {0u, 1u, 3u, 4u, 17u, 1000u, 18000u}) {
        CAPTURE(n);
        const auto a = random_vec(n, 5), b = random_vec(n, 6);
        const double s = k::scalar().dot(a.data(), b.data(), n);
        const double w = v->dot(a.data(), b.data(), n);
        double mag = 0;
        for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
        CHECK(std::abs(s - w) <= 1e-12 * (mag + 1));
    }
}

TEST_CASE("neighbor sums agree across ISAs including wrap-around neighbors") {
    const auto* v = k::avx2();
    if (!v) return;
    const std::size_t n = 1001;
    const auto xs = random_vec(n, 7, 0, 100), ys = random_vec(n, 8, 0, 100);
    const auto vx = random_vec(n, 9, -2, 2), vy = random_vec(n, 10, -2, 2);
    for (int q = 0; q < 50; ++q) {
        // Focal points near edges exercise the minimum-image wrap.
        const k::NeighborQuery query{Draws(11, q, 0).uniform(0, 100), q % 2 ? 99.5 : 0.5, 100, 100, 144, 16};
        k::NeighborSums s, w;
        k::scalar().neighbor_sums(query, xs.data(), ys.data(), vx.data(), vy.data(), n, s);
        v->neighbor_sums(query, xs.data(), ys.data(), vx.data(), vy.data(), n, w);
        CHECK(s.count == w.count);
        CHECK(s.offset_x == doctest::Approx(w.offset_x).epsilon(1e-12));
        CHECK(s.offset_y == doctest::Approx(w.offset_y).epsilon(1e-12));
        CHECK(s.vel_x == doctest::Approx(w.vel_x).epsilon(1e-12));
        CHECK(s.vel_y == doctest::Approx(w.vel_y).epsilon(1e-12));
        CHECK(s.sep_x == doctest::Approx(w.sep_x).epsilon(1e-12));
        CHECK(s.sep_y == doctest::Approx(w.sep_y).epsilon(1e-12));
    }
}

TEST_CASE("diffusion gives identical fields under either kernel table") {
    IsaGuard guard;
    if (!k::avx2()) return;
    TrailField a(37, 29);
    for (std::size_t i = 0; i < a.values().size(); ++i) a.values()[i] = Draws(12, i, 0).uniform(0, 5);
    TrailField b = a;
    REQUIRE(k::select(k::Isa::scalar));
    for (int i = 0; i < 10; ++i) field_diffuse_decay(a, 0.9);
    REQUIRE(k::select(k::Isa::avx2));
    for (int i = 0; i < 10; ++i) field_diffuse_decay(b, 0.9);
    CHECK(a == b);
}

TEST_CASE("physarum steps identically under either kernel table") {
    IsaGuard guard;
    if (!k::avx2()) return;
    std::vector<TrailField> fa(2, TrailField(96, 96));
    const std::vector<std::size_t> counts{500, 500};
    auto agents_a = spawn_physarum(counts, fa[0], 3);
    auto fb = fa;
    auto agents_b = agents_a;
    const std::vector<SpeciesParams> params(2);
    const auto coupling = default_coupling(2);
    REQUIRE(k::select(k::Isa::scalar));
    for (std::uint64_t s = 0; s < 20; ++s) {
        step_physarum(agents_a, fa, params, coupling, 1, s);
        for (auto& f : fa) field_diffuse_decay(f, 0.9);
    }
    REQUIRE(k::select(k::Isa::avx2));
    for (std::uint64_t s = 0; s < 20; ++s) {
        step_physarum(agents_b, fb, params, coupling, 1, s);
        for (auto& f : fb) field_diffuse_decay(f, 0.9);
    }
    CHECK(agents_a == agents_b);
    CHECK(fa == fb);
}
