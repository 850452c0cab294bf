#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "spikeforge/io.hpp"
#include "spikeforge/network.hpp"

using namespace spikeforge;

namespace {

NetworkSpec single_linear(std::vector<double> w, std::vector<double> b, std::size_t out, std::size_t in) {
  NetworkSpec net;
  net.input_dim = in;
  net.layers.push_back({"fc", Linear{Tensor::matrix(out, in, std::move(w)), Tensor::vector(std::move(b))}});
  return net;
}

Tensor random_tensor(std::mt19937_64& rng, Shape s, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(s));
  for (auto& v : t.data()) v = u(rng);
  return t;
}

}  // namespace

TEST(Tensor, RejectsMismatchedDataAndEmptyShapes) {
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor(Shape{}), DimensionError);
  EXPECT_THROW(Tensor(Shape{3, 0}), DimensionError);
}

TEST(Tensor, SoftmaxRowsSumToOne) {
  const Tensor x = Tensor::matrix(2, 3, {1, 2, 3, -5, 0, 1000});
  const Tensor p = softmax_last_axis(x);
  for (std::size_t r = 0; r < 2; ++r) {
    double s = 0;
    for (double v : p.row(r)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-15);
  }
  EXPECT_NEAR(p.at(1, 2), 1.0, 1e-15);
}

TEST(Forward, IdentityLinear) {
  const auto net = single_linear({1, 0, 0, 1}, {0, 0}, 2, 2);
  EXPECT_EQ(forward(net, Tensor::vector({3, 4})).output.values(), (std::vector<double>{3, 4}));
}

TEST(Forward, AffineLinear) {
  const auto net = single_linear({2, 0, 0, 2}, {1, 1}, 2, 2);
  EXPECT_EQ(forward(net, Tensor::vector({1, 1})).output.values(), (std::vector<double>{3, 3}));
}

TEST(Forward, TwoLayerMatchesDenseOracle) {
  std::mt19937_64 rng(11);
  const Tensor w1 = random_tensor(rng, {5, 3}), b1 = random_tensor(rng, {5});
  const Tensor w2 = random_tensor(rng, {2, 5}), b2 = random_tensor(rng, {2});
  NetworkSpec net;
  net.input_dim = 3;
  net.layers = {{"fc1", Linear{w1, b1}}, {"act", ReLU{}}, {"fc2", Linear{w2, b2}}};
  net.validate();
  const auto W1 = oracle::from_flat(w1.values(), 5, 3), W2 = oracle::from_flat(w2.values(), 2, 5);
  for (int i = 0; i < 10; ++i) {
    const Tensor x = random_tensor(rng, {3}, -3, 3);
    const auto expect = oracle::matvec(W2, oracle::relu(oracle::matvec(W1, x.values(), b1.values())), b2.values());
    const auto got = forward(net, x).output;
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(got[k], expect[k], 1e-12);
  }
}

TEST(Forward, RecordsTensorEnteringSlotByIdAndName) {
  NetworkSpec net = single_linear({1, -1, 2, 0}, {0.5, 0}, 2, 2);
  net.layers.push_back({"slot_layer", NeuronSlot{"s"}});
  const auto by_id = forward(net, Tensor::vector({1, 2}), {"s"});
  ASSERT_EQ(by_id.recorded.count("s"), 1u);
  EXPECT_EQ(by_id.recorded.at("s").values(), (std::vector<double>{-0.5, 2}));
  const auto by_name = forward(net, Tensor::vector({1, 2}), {"slot_layer"});
  EXPECT_EQ(by_name.recorded.count("slot_layer"), 1u);
}

TEST(Forward, ShapeMismatchIsDimensionError) {
  const auto net = single_linear({1, 0, 0, 1}, {0, 0}, 2, 2);
  EXPECT_THROW(forward(net, Tensor::vector({1, 2, 3})), DimensionError);
}

TEST(Forward, NonFiniteNamesTheLayer) {
  auto net = single_linear({1e308, 0, 0, 1}, {0, 0}, 2, 2);
  try {
    forward(net, Tensor::vector({1e10, 1}));
    FAIL() << "expected a numeric error";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("'fc'"), std::string::npos);
  }
}

TEST(Validate, RejectsBrokenChainsAndDuplicateSlots) {
  NetworkSpec net = single_linear({1, 0, 0, 1, 1, 1}, {0, 0, 0}, 3, 2);
  net.layers.push_back({"fc2", Linear{Tensor::matrix(1, 2, {1, 1}), Tensor::vector({0})}});
  EXPECT_THROW(net.validate(), ValidationError);

  NetworkSpec dup;
  dup.input_dim = 2;
  dup.layers = {{"a", NeuronSlot{"x"}}, {"relu", ReLU{}}, {"b", NeuronSlot{"x"}}};
  EXPECT_THROW(dup.validate(), ValidationError);
}

TEST(Attention, SingleTokenIsWoWvToken) {
  AttentionHead h;
  h.wq = Tensor::matrix(2, 2, {1, 2, 3, 4});
  h.wk = Tensor::matrix(2, 2, {0, 1, 1, 0});
  h.wv = Tensor::matrix(2, 2, {1, -1, 0.5, 2});
  h.wo = Tensor::matrix(1, 2, {2, 3});
  h.scale = 0.5;
  const Tensor tok = Tensor::matrix(1, 2, {0.3, -0.7});
  const auto out = attention_forward(h, tok);
  const double v0 = 1 * 0.3 + -1 * -0.7, v1 = 0.5 * 0.3 + 2 * -0.7;
  EXPECT_NEAR(out.at(0, 0), 2 * v0 + 3 * v1, 1e-14);
}

TEST(Attention, IdenticalTokensGiveIdenticalRows) {
  std::mt19937_64 rng(3);
  AttentionHead h{random_tensor(rng, {3, 2}), random_tensor(rng, {3, 2}), random_tensor(rng, {2, 2}),
                  random_tensor(rng, {2, 2}), 0.7, ""};
  const Tensor toks = Tensor::matrix(4, 2, {0.2, 0.9, 0.2, 0.9, 0.2, 0.9, 0.2, 0.9});
  const auto out = attention_forward(h, toks);
  for (std::size_t r = 1; r < 4; ++r)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(out.at(r, c), out.at(0, c));
}

TEST(Attention, MatchesNaiveOracle) {
  std::mt19937_64 rng(17);
  AttentionHead h{random_tensor(rng, {2, 2}), random_tensor(rng, {2, 2}), random_tensor(rng, {2, 2}),
                  random_tensor(rng, {2, 2}), 1.0 / std::sqrt(2.0), ""};
  const Tensor toks = random_tensor(rng, {3, 2}, -2, 2);
  const auto got = attention_forward(h, toks);
  const auto expect = oracle::attention(oracle::from_flat(toks.values(), 3, 2), oracle::from_flat(h.wq.values(), 2, 2),
                                        oracle::from_flat(h.wk.values(), 2, 2), oracle::from_flat(h.wv.values(), 2, 2),
                                        oracle::from_flat(h.wo.values(), 2, 2), h.scale);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(got.at(r, c), expect[r][c], 1e-12);
}

TEST(Attention, RejectsNonMatrixInput) {
  std::mt19937_64 rng(1);
  AttentionHead h{random_tensor(rng, {2, 2}), random_tensor(rng, {2, 2}), random_tensor(rng, {2, 2}),
                  random_tensor(rng, {2, 2}), 1.0, ""};
  EXPECT_THROW(attention_forward(h, Tensor::vector({1, 2})), DimensionError);
}

TEST(AffineProbe, ClassifiesLayers) {
  std::mt19937_64 rng(5);
  const LayerSpec lin{"fc", Linear{random_tensor(rng, {3, 2}), random_tensor(rng, {3})}};
  EXPECT_TRUE(layer_is_affine(lin, {2, 2}));
  EXPECT_FALSE(layer_is_affine({"r", ReLU{}}, {2, 3}));
  EXPECT_FALSE(layer_is_affine({"g", GELU{}}, {2, 3}));
  EXPECT_FALSE(layer_is_affine({"s", SoftMax{}}, {2, 3}));
}

TEST(NetworkJson, RoundTripPreservesStructureAndValues) {
  std::mt19937_64 rng(23);
  NetworkSpec net;
  net.input_dim = 2;
  AttentionHead h{random_tensor(rng, {2, 2}), random_tensor(rng, {2, 2}), random_tensor(rng, {3, 2}),
                  random_tensor(rng, {2, 3}), 0.25, "attn_p"};
  net.layers = {{"in", NeuronSlot{"in"}},      {"attn", h}, {"fc", Linear{random_tensor(rng, {4, 2}), random_tensor(rng, {4})}},
                {"act", GELU{}},              {"h", NeuronSlot{"h"}}, {"sm", SoftMax{}}, {"p", NeuronSlot{"p"}}};
  net.validate();
  const auto back = network_from_json(parse_json_text(network_to_json(net).dump(), "mem"));
  EXPECT_EQ(network_to_json(back), network_to_json(net));
  const Tensor x = random_tensor(rng, {3, 2});
  EXPECT_EQ(forward(back, x).output, forward(net, x).output);
  const auto slots = back.slots();
  ASSERT_EQ(slots.size(), 4u);
  EXPECT_EQ(slots[1].id, "attn_p");
  EXPECT_TRUE(slots[1].follows_softmax);
  EXPECT_TRUE(slots[3].follows_softmax);
  EXPECT_FALSE(slots[2].follows_softmax);
}

TEST(NetworkJson, ErrorsCarryFieldPath) {
  const std::string doc = R"({"format":"spikeforge.network","version":1,"input_dim":2,
    "layers":[{"kind":"linear","name":"fc","weight":{"shape":[2,2],"data":[1,2,3]},"bias":{"shape":[2],"data":[0,0]}}]})";
  try {
    network_from_json(parse_json_text(doc, "mem"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("$.layers[0].weight"), std::string::npos) << e.what();
  }
  const std::string bad_kind = R"({"input_dim":2,"layers":[{"kind":"conv"}]})";
  EXPECT_THROW(network_from_json(parse_json_text(bad_kind, "mem")), ParseError);
  const std::string bad_dim = R"({"input_dim":3,"layers":[{"kind":"linear","weight":{"shape":[1,2],"data":[1,2]},"bias":{"shape":[1],"data":[0]}}]})";
  EXPECT_THROW(network_from_json(parse_json_text(bad_dim, "mem")), ValidationError);
}

TEST(Dataset, ParsesHeaderLabelsAndSamplesDeterministically) {
  const auto ds = parse_dataset("sample_id,a,b,label\nx,1,2,0\ny,3,4,1\nz,5,6,2\n");
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_TRUE(ds.labeled());
  EXPECT_EQ(ds.features[1], (std::vector<double>{3, 4}));
  EXPECT_EQ(ds.labels[2], 2);
  const auto unl = parse_dataset("s0,1,2\ns1,3,4\n");
  EXPECT_FALSE(unl.labeled());
  EXPECT_EQ(unl.features[0].size(), 2u);
  EXPECT_THROW(parse_dataset("id,a,label\nx,1,0.5\n"), ParseError);
  EXPECT_THROW(parse_dataset("id,a\nx,nan\n"), ParseError);

  std::string big = "id,a,label\n";
  for (int i = 0; i < 500; ++i) big += "r" + std::to_string(i) + "," + std::to_string(i) + ",0\n";
  const auto all = parse_dataset(big);
  const auto s1 = all.sample_fraction(0.02, 9), s2 = all.sample_fraction(0.02, 9), s3 = all.sample_fraction(0.02, 10);
  EXPECT_EQ(s1.size(), 10u);
  EXPECT_EQ(s1.ids, s2.ids);
  EXPECT_NE(s1.ids, s3.ids);
  EXPECT_TRUE(std::is_sorted(s1.features.begin(), s1.features.end()));
}
