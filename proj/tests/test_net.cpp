#include <gtest/gtest.h>

#include <random>

#include "conjae/net.hpp"

using namespace conjae;

namespace {

DenseNet single_layer(double w, double b, Activation act) {
    DenseNet net;
    Layer l;
    l.W = Matrix::Constant(1, 1, w);
    l.b = Vector::Constant(1, b);
    l.act = act;
    net.layers.push_back(l);
    return net;
}

// Independent oracle: central finite differences of the MSE loss through the
// forward pass only.
double fd_gradient(DenseNet& net, double* param, const Matrix& x, const Matrix& y, double h) {
    const double orig = *param;
    *param = orig + h;
    double up = (forward(net, x) - y).squaredNorm() / double(y.size());
    *param = orig - h;
    double dn = (forward(net, x) - y).squaredNorm() / double(y.size());
    *param = orig;
    return (up - dn) / (2.0 * h);
}

}  // namespace

TEST(Forward, Examples) {
    Matrix x = Matrix::Constant(1, 1, 0.3);
    EXPECT_DOUBLE_EQ(forward(single_layer(1.0, 0.0, Activation::Identity), x)(0, 0), 0.3);

    Matrix x2 = Matrix::Constant(1, 1, 0.5);
    EXPECT_DOUBLE_EQ(forward(single_layer(-1.0, 0.0, Activation::ReLU), x2)(0, 0), 0.0);

    Matrix x3 = Matrix::Constant(1, 1, -1.0);
    double expected = kSeluLambda * kSeluAlpha * (std::exp(-1.0) - 1.0);
    EXPECT_NEAR(forward(single_layer(1.0, 0.0, Activation::SeLU), x3)(0, 0), expected, 1e-12);
    EXPECT_NEAR(expected, -1.1113, 5e-4);
}

TEST(Forward, DimensionMismatch) {
    DenseNet net = init_net({2, 3, 1}, Activation::ReLU, 1);
    Matrix x = Matrix::Zero(3, 1);
    EXPECT_THROW(forward(net, x), std::invalid_argument);
}

TEST(Backward, AffineChainRule) {
    DenseNet net = single_layer(0.7, 0.1, Activation::Identity);
    Matrix x = Matrix::Constant(1, 1, 0.4);
    GradientTape tape;
    forward(net, x, tape);
    Gradients g;
    Matrix dx = backward(net, tape, Matrix::Constant(1, 1, 1.0), g);
    EXPECT_DOUBLE_EQ(g.dW[0](0, 0), 0.4);   // dW = x
    EXPECT_DOUBLE_EQ(g.db[0](0), 1.0);      // db = 1
    EXPECT_DOUBLE_EQ(dx(0, 0), 0.7);        // dx = W
}

TEST(Backward, ZeroUpstreamGivesZeroGrads) {
    DenseNet net = init_net({2, 4, 1}, Activation::SeLU, 5);
    Matrix x = Matrix::Random(2, 3);
    GradientTape tape;
    forward(net, x, tape);
    Gradients g;
    backward(net, tape, Matrix::Zero(1, 3), g);
    EXPECT_EQ(g.max_abs(), 0.0);
}

TEST(Backward, TapeReuseRejected) {
    DenseNet net = single_layer(1.0, 0.0, Activation::Identity);
    Matrix x = Matrix::Constant(1, 1, 0.4);
    GradientTape tape;
    forward(net, x, tape);
    Gradients g;
    backward(net, tape, Matrix::Constant(1, 1, 1.0), g);
    EXPECT_THROW(backward(net, tape, Matrix::Constant(1, 1, 1.0), g), std::logic_error);
}

// 20 random small nets, both activations: every parameter gradient matches
// central finite differences (step 1e-6) at relative error < 1e-5.
TEST(Backward, FiniteDifferenceOracle) {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> dim(1, 8);
    std::uniform_int_distribution<int> depth(1, 3);
    const double h = 1e-6;
    for (int trial = 0; trial < 20; ++trial) {
        Activation act = (trial % 2 == 0) ? Activation::SeLU : Activation::ReLU;
        std::vector<int> dims{dim(rng)};
        int layers = depth(rng);
        for (int k = 0; k < layers; ++k) dims.push_back(dim(rng));
        DenseNet net = init_net(dims, act, rng());

        Matrix x = Matrix::Random(dims.front(), 4);
        Matrix y = Matrix::Random(dims.back(), 4);

        GradientTape tape;
        Matrix p = forward(net, x, tape);
        Matrix dy = 2.0 / double(y.size()) * (p - y);
        Gradients g;
        backward(net, tape, dy, g);

        for (std::size_t k = 0; k < net.layers.size(); ++k) {
            for (Eigen::Index i = 0; i < net.layers[k].W.size(); ++i) {
                double analytic = g.dW[k].data()[i];
                double numeric = fd_gradient(net, net.layers[k].W.data() + i, x, y, h);
                double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
                ASSERT_LT(std::abs(analytic - numeric) / denom, 1e-5)
                    << "trial " << trial << " layer " << k << " w" << i;
            }
            for (Eigen::Index i = 0; i < net.layers[k].b.size(); ++i) {
                double analytic = g.db[k](i);
                double numeric = fd_gradient(net, net.layers[k].b.data() + i, x, y, h);
                double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
                ASSERT_LT(std::abs(analytic - numeric) / denom, 1e-5);
            }
        }
    }
}

TEST(InitNet, DeterministicAndShaped) {
    DenseNet a = init_net({1, 256, 1}, Activation::SeLU, 7);
    DenseNet b = init_net({1, 256, 1}, Activation::SeLU, 7);
    ASSERT_EQ(a.layers.size(), 2u);
    EXPECT_EQ(a.layers[0].W.rows(), 256);
    EXPECT_EQ(a.layers[0].W.cols(), 1);
    EXPECT_EQ(a.layers[1].W.rows(), 1);
    EXPECT_EQ(a.layers[1].W.cols(), 256);
    for (std::size_t k = 0; k < a.layers.size(); ++k) {
        EXPECT_TRUE(a.layers[k].W == b.layers[k].W);
        EXPECT_TRUE(a.layers[k].b == b.layers[k].b);
    }
    // fan-based bound applies to every weight
    const double s = std::sqrt(6.0 / 257.0);
    for (const auto& layer : a.layers) {
        EXPECT_LE(layer.W.cwiseAbs().maxCoeff(), s);
        EXPECT_EQ(layer.b.cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Adam, ZeroGradLeavesParamsUnchanged) {
    DenseNet net = init_net({2, 3, 1}, Activation::ReLU, 3);
    DenseNet before = net;
    OptimizerState st = OptimizerState::for_net(net, 0.005);
    Gradients g;
    for (const auto& layer : net.layers) {
        g.dW.push_back(Matrix::Zero(layer.W.rows(), layer.W.cols()));
        g.db.push_back(Vector::Zero(layer.b.size()));
    }
    adam_step(net, g, st);
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        EXPECT_TRUE(net.layers[k].W == before.layers[k].W);
        EXPECT_TRUE(net.layers[k].b == before.layers[k].b);
    }
}

// first bias-corrected step with g = 1 moves each parameter by ~lr
TEST(Adam, FirstStepMagnitude) {
    DenseNet net = single_layer(0.5, 0.25, Activation::Identity);
    OptimizerState st = OptimizerState::for_net(net, 0.005);
    Gradients g;
    g.dW.push_back(Matrix::Constant(1, 1, 1.0));
    g.db.push_back(Vector::Constant(1, 1.0));
    adam_step(net, g, st);
    EXPECT_NEAR(net.layers[0].W(0, 0), 0.5 - 0.005, 1e-6);
    EXPECT_NEAR(net.layers[0].b(0), 0.25 - 0.005, 1e-6);
}

TEST(Adam, MonotoneUnderRepeatedGradient) {
    DenseNet net = single_layer(0.5, 0.0, Activation::Identity);
    OptimizerState st = OptimizerState::for_net(net, 0.01);
    Gradients g;
    g.dW.push_back(Matrix::Constant(1, 1, 1.0));
    g.db.push_back(Vector::Zero(1));
    double prev = net.layers[0].W(0, 0);
    for (int i = 0; i < 5; ++i) {
        adam_step(net, g, st);
        EXPECT_LT(net.layers[0].W(0, 0), prev);
        prev = net.layers[0].W(0, 0);
    }
}

TEST(Adam, RejectsNaNGradients) {
    DenseNet net = single_layer(0.5, 0.0, Activation::Identity);
    DenseNet before = net;
    OptimizerState st = OptimizerState::for_net(net, 0.01);
    Gradients g;
    g.dW.push_back(Matrix::Constant(1, 1, std::nan("")));
    g.db.push_back(Vector::Zero(1));
    EXPECT_THROW(adam_step(net, g, st), std::runtime_error);
    EXPECT_TRUE(net.layers[0].W == before.layers[0].W);
}

TEST(Dropout, KeepAllIsBitExact) {
    DenseNet net = init_net({2, 16, 1}, Activation::SeLU, 11);
    Matrix x = Matrix::Random(2, 5);
    Matrix plain = forward(net, x);
    DropoutSpec drop{1.0};
    std::mt19937_64 rng(1);
    GradientTape tape;
    Matrix masked = forward(net, x, tape, &drop, &rng);
    EXPECT_TRUE(plain == masked);
}

// over 1e5 masks at p_keep = 0.8 the mean masked-and-scaled activation is
// within 1% of the unmasked activation
TEST(Dropout, InvertedScalingIsUnbiased) {
    DenseNet net = init_net({1, 8, 1}, Activation::Identity, 2);
    // make hidden activations nonzero and fixed
    net.layers[0].W = Matrix::Constant(8, 1, 1.0);
    net.layers[0].b = Vector::Constant(8, 0.5);
    net.layers[1].W = Matrix::Constant(1, 8, 1.0);
    net.layers[1].b = Vector::Zero(1);

    Matrix x = Matrix::Constant(1, 1, 0.5);
    double unmasked = forward(net, x)(0, 0);

    DropoutSpec drop{0.8};
    std::mt19937_64 rng(123);
    double sum = 0.0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
        GradientTape tape;
        sum += forward(net, x, tape, &drop, &rng)(0, 0);
    }
    EXPECT_NEAR(sum / trials, unmasked, 0.01 * std::abs(unmasked));
}

TEST(Checkpoint, NetRoundTripIsExact) {
    DenseNet net = init_net({2, 5, 3}, Activation::SeLU, 77);
    DenseNet back = net_from_json(net_to_json(net));
    ASSERT_EQ(back.layers.size(), net.layers.size());
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        EXPECT_TRUE(back.layers[k].W == net.layers[k].W);
        EXPECT_TRUE(back.layers[k].b == net.layers[k].b);
        EXPECT_EQ(back.layers[k].act, net.layers[k].act);
    }
    EXPECT_EQ(back.rng_seed, net.rng_seed);
}

TEST(Checkpoint, OptimizerRoundTrip) {
    DenseNet net = init_net({1, 4, 1}, Activation::ReLU, 5);
    OptimizerState st = OptimizerState::for_net(net, 0.005);
    Gradients g;
    for (const auto& layer : net.layers) {
        g.dW.push_back(Matrix::Random(layer.W.rows(), layer.W.cols()));
        g.db.push_back(Vector::Random(layer.b.size()));
    }
    adam_step(net, g, st);
    OptimizerState back = optimizer_from_json(optimizer_to_json(st), net);
    EXPECT_EQ(back.step, st.step);
    for (std::size_t k = 0; k < st.m_W.size(); ++k) {
        EXPECT_TRUE(back.m_W[k] == st.m_W[k]);
        EXPECT_TRUE(back.v_W[k] == st.v_W[k]);
    }
}

// identical seeds give identical update trajectories
TEST(Determinism, TrajectoryBitExact) {
    auto run = [] {
        DenseNet net = init_net({1, 8, 1}, Activation::SeLU, 21);
        OptimizerState st = OptimizerState::for_net(net, 0.01);
        Matrix x = Matrix::Constant(1, 4, 0.3);
        Matrix y = Matrix::Constant(1, 4, 0.7);
        for (int i = 0; i < 20; ++i) {
            GradientTape tape;
            Matrix p = forward(net, x, tape);
            Gradients g;
            backward(net, tape, 2.0 / 4.0 * (p - y), g);
            adam_step(net, g, st);
        }
        return forward(net, x)(0, 0);
    };
    double a = run(), b = run();
    EXPECT_EQ(a, b);
}
