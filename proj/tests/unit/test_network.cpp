#include "support.hpp"

#include <doctest.h>

using namespace sigverify;
using testing::random_mlp;

TEST_SUITE("network")
{
    TEST_CASE("evaluate small examples")
    {
        Network sig(1, {SShapedLayer{SShapedKind::Sigmoid}});
        CHECK(evaluate(sig, Vector::Zero(1))[0] == 0.5);

        Network relu(1, {AffineLayer{Matrix::Constant(1, 1, 2.0), Vector::Constant(1, -1.0)}, ReluLayer{}});
        CHECK(evaluate(relu, Vector::Constant(1, 0.25))[0] == 0.0);

        Network th(1, {AffineLayer{Matrix::Identity(1, 1), Vector::Zero(1)}, SShapedLayer{SShapedKind::Tanh}});
        CHECK(evaluate(th, Vector::Zero(1))[0] == 0.0);

        Network leaky(1, {LeakyReluLayer{0.1}});
        CHECK(evaluate(leaky, Vector::Constant(1, -2.0))[0] == doctest::Approx(-0.2));
    }

    TEST_CASE("dimension errors name the layer")
    {
        try {
            Network bad(2, {AffineLayer{Matrix::Zero(3, 2), Vector::Zero(3)}, ReluLayer{},
                            AffineLayer{Matrix::Zero(1, 2), Vector::Zero(1)}});
            FAIL("expected DimensionError");
        } catch (const DimensionError &e) {
            CHECK(e.layer() == 2);
            CHECK(std::string(e.what()).find("layer 2") != std::string::npos);
        }
        CHECK_THROWS_AS(Network(1, {AffineLayer{Matrix::Zero(2, 1), Vector::Zero(3)}}), DimensionError);
        Network ok(2, {ReluLayer{}});
        CHECK_THROWS_AS(evaluate(ok, Vector::Zero(3)), DimensionError);
    }

    TEST_CASE("evaluation is bit-deterministic")
    {
        std::mt19937_64 rng(7);
        Network net = random_mlp(rng, {3, 5, 5, 2}, SShapedLayer{SShapedKind::Tanh});
        Vector x = Vector::Random(3);
        const Vector a = evaluate(net, x);
        const Vector b = evaluate(net, x);
        CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
    }

    TEST_CASE("trace ends with the output")
    {
        std::mt19937_64 rng(3);
        Network net = random_mlp(rng, {2, 4, 3}, ReluLayer{});
        const Vector x = Vector::Random(2);
        const auto trace = evaluate_trace(net, x);
        REQUIRE(trace.size() == net.size() + 1);
        CHECK(trace.front() == x);
        CHECK(trace.back() == evaluate(net, x));
    }

    TEST_CASE("concatenate identity and frozen latent")
    {
        Network id(1, {AffineLayer{Matrix::Identity(1, 1), Vector::Zero(1)}});
        LatentPerturbationSpec spec{id, Vector(0), Vector::Zero(1), Vector::Ones(1), 0.5};
        Network composed = concatenate(spec, id);
        CHECK(composed.input_dim() == 1);
        for (double z : {-1.0, 0.0, 0.37})
            CHECK(evaluate(composed, Vector::Constant(1, z))[0] == doctest::Approx(z).epsilon(1e-15));

        std::mt19937_64 rng(11);
        Network gen = random_mlp(rng, {1, 3, 2}, SShapedLayer{SShapedKind::Sigmoid});
        Network cls = random_mlp(rng, {2, 2}, ReluLayer{});
        LatentPerturbationSpec frozen{gen, Vector(0), Vector::Constant(1, 0.3), Vector::Zero(1), 1.0};
        const Vector fixed = evaluate(cls, evaluate(gen, Vector::Constant(1, 0.3)));
        Network c2 = concatenate(frozen, cls);
        for (double z : {-1.0, 0.5, 2.0})
            CHECK((evaluate(c2, Vector::Constant(1, z)) - fixed).cwiseAbs().maxCoeff() <= 1e-15);
    }

    TEST_CASE("concatenate matches the two-stage pipeline")
    {
        std::mt19937_64 rng(2024);
        std::normal_distribution<double> normal;
        for (bool affine_first : {true, false}) {
            // Generator input = [instance (1); latent (1)].
            Network gen = random_mlp(rng, {2, 4, 2}, SShapedLayer{SShapedKind::Sigmoid});
            if (!affine_first) {
                std::vector<Layer> layers{SShapedLayer{SShapedKind::Tanh}};
                layers.insert(layers.end(), gen.layers().begin(), gen.layers().end());
                gen = Network(2, layers);
            }
            Network cls = random_mlp(rng, {2, 3, 2}, SShapedLayer{SShapedKind::Tanh});
            LatentPerturbationSpec spec{gen, Vector::Constant(1, normal(rng)), Vector::Constant(1, normal(rng)),
                                        Vector::Constant(1, std::abs(normal(rng))), 1.0};
            Network composed = concatenate(spec, cls);
            REQUIRE(composed.input_dim() == 1);

            double worst100 = 0.0;
            double worst = 0.0;
            for (int s = 0; s < 1000; ++s) {
                const Vector z = Vector::Constant(1, 3.0 * normal(rng));
                Vector gin(2);
                gin << spec.instance, spec.mu + z.cwiseProduct(spec.sigma_scale);
                const Vector manual = evaluate(cls, evaluate(gen, gin));
                const double diff = (evaluate(composed, z) - manual).cwiseAbs().maxCoeff();
                worst = std::max(worst, diff);
                if (s < 100)
                    worst100 = std::max(worst100, diff);
            }
            CHECK(worst100 <= 1e-12);
            CHECK(worst <= 1e-10);
        }
    }

    TEST_CASE("concatenate rejects mismatched parts")
    {
        Network gen(2, {AffineLayer{Matrix::Identity(2, 2), Vector::Zero(2)}});
        Network cls(3, {ReluLayer{}});
        LatentPerturbationSpec spec{gen, Vector(0), Vector::Zero(2), Vector::Ones(2), 0.1};
        CHECK_THROWS_AS(concatenate(spec, cls), DimensionError);
        spec.sigma_scale = Vector::Ones(1);
        CHECK_THROWS_AS(concatenate(spec, Network(2, {ReluLayer{}})), DimensionError);
        spec.sigma_scale = -Vector::Ones(2);
        CHECK_THROWS_AS(concatenate(spec, Network(2, {ReluLayer{}})), DimensionError);
    }

    TEST_CASE("S-shaped family shape")
    {
        for (SShapedFamily f : {SShapedFamily::sigmoid(), SShapedFamily::tanh()}) {
            int sign_changes = 0;
            double prev_value = f.value(-10.0);
            double prev_d2 = 0.0;
            const double h = 20.0 / 2000;
            for (int i = 1; i <= 2000; ++i) {
                const double x = -10.0 + i * h;
                CHECK(f.derivative(x) >= 0.0);
                const double v = f.value(x);
                CHECK(v > prev_value);
                prev_value = v;
                if (i < 2000) {
                    const double d2 = f.value(x + h) - 2 * v + f.value(x - h);
                    if (std::abs(d2) > 1e-14) {
                        if (prev_d2 != 0.0 && (d2 > 0) != (prev_d2 > 0))
                            ++sign_changes;
                        prev_d2 = d2;
                    }
                }
            }
            CHECK(sign_changes == 1);
            // The derivative kernels agree with finite differences.
            for (double x : {-5.0, -1.0, 0.0, 0.7, 4.0})
                CHECK(f.derivative(x) == doctest::Approx((f.value(x + 1e-6) - f.value(x - 1e-6)) / 2e-6).epsilon(1e-6));
        }
        CHECK(SShapedFamily::sigmoid().derivative(-700.0) >= 0.0);
    }
}
