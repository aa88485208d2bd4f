#include <filesystem>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "trinuseg/image_io.hpp"
#include "trinuseg/labels.hpp"

using namespace trinuseg;

TEST_CASE("two instances sharing a border on 8x8") {
  const InstanceMask m = fixtures::two_instance_fixture();
  const LabelTriplet t = derive_label_triplet(m);
  const LabelTriplet want = fixtures::brute_force_triplet(m, 2);
  CHECK(t.nuclei == want.nuclei);
  CHECK(t.edge == want.edge);
  CHECK(t.cluster_edge == want.cluster_edge);
  // the shared border is clustered on both sides
  for (int y = 2; y <= 5; ++y) {
    CHECK(t.cluster_edge.at(y, 3) == 1);
    CHECK(t.cluster_edge.at(y, 4) == 1);
    // outer sides are normal edges
    CHECK(t.edge.at(y, 1) == 1);
    CHECK(t.edge.at(y, 6) == 1);
  }
  // interior pixels are neither
  CHECK(t.edge.at(3, 2) == 0);
  CHECK(t.cluster_edge.at(3, 2) == 0);
}

TEST_CASE("isolated disk has only normal edges") {
  InstanceMask m(21, 21);
  for (int y = 0; y < 21; ++y)
    for (int x = 0; x < 21; ++x)
      if ((y - 10) * (y - 10) + (x - 10) * (x - 10) <= 36) m.at(y, x) = 1;
  const LabelTriplet t = derive_label_triplet(m);
  CHECK(t.cluster_edge.count() == 0);
  CHECK(t.edge == boundary_pixels(m));
  CHECK(t.edge.count() > 0);
}

TEST_CASE("empty mask gives an empty triplet") {
  const LabelTriplet t = derive_label_triplet(InstanceMask(16, 16));
  CHECK(t.nuclei.count() + t.edge.count() + t.cluster_edge.count() == 0);
}

TEST_CASE("invalid masks are rejected") {
  InstanceMask gap = fixtures::two_instance_fixture();
  for (auto& id : gap.ids)
    if (id == 2) id = 3;  // ids 1 and 3
  CHECK_THROWS_AS(derive_label_triplet(gap), LabelError);
  InstanceMask split(4, 4);
  split.at(0, 0) = 1;
  split.at(3, 3) = 1;  // two pieces, one id
  CHECK_THROWS_AS(split.validate(), LabelError);
  InstanceMask diagonal(2, 2);
  diagonal.at(0, 0) = diagonal.at(1, 1) = 1;  // 8- but not 4-connected
  CHECK_THROWS_AS(diagonal.validate(), LabelError);
}

TEST_CASE("partition invariant over 100 generated masks") {
  for (int seed = 0; seed < 100; ++seed) {
    const SyntheticSample s = generate_synthetic_sample(seed, 64, 6, 0.7);
    s.instances.validate();
    const LabelTriplet t = derive_label_triplet(s.instances);
    const BinaryMask boundary = boundary_pixels(s.instances);
    for (std::size_t i = 0; i < boundary.data.size(); ++i) {
      const bool e = t.edge.data[i], c = t.cluster_edge.data[i];
      REQUIRE_FALSE((e && c));
      REQUIRE((e || c) == bool(boundary.data[i]));
      if (boundary.data[i]) REQUIRE(t.nuclei.data[i] == 1);
    }
    if (seed % 10 == 0) {
      const LabelTriplet want = fixtures::brute_force_triplet(s.instances, 2);
      CHECK(t.edge == want.edge);
      CHECK(t.cluster_edge == want.cluster_edge);
    }
    CHECK(derive_label_triplet(s.instances).edge == t.edge);  // pure
  }
}

TEST_CASE("generator: determinism, ranges, empty and unclustered cases") {
  const SyntheticSample a = generate_synthetic_sample(3, 96, 9, 0.5);
  const SyntheticSample b = generate_synthetic_sample(3, 96, 9, 0.5);
  CHECK(a.image.data == b.image.data);
  CHECK(a.instances == b.instances);
  CHECK(a.instances.max_id() > 0);
  for (float v : a.image.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  const SyntheticSample c = generate_synthetic_sample(4, 96, 9, 0.5);
  CHECK(c.image.data != a.image.data);

  const SyntheticSample empty = generate_synthetic_sample(0, 64, 0, 0.5);
  CHECK(empty.instances.max_id() == 0);
  double mean = 0;
  for (float v : empty.image.data) mean += v;
  mean /= double(empty.image.data.size());
  CHECK(mean == doctest::Approx(0.1).epsilon(0.05));

  const SyntheticSample apart = generate_synthetic_sample(0, 128, 3, 0.0);
  CHECK(derive_label_triplet(apart.instances).cluster_edge.count() == 0);

  const SyntheticSample clustered = generate_synthetic_sample(0, 128, 16, 1.0);
  CHECK(derive_label_triplet(clustered.instances).cluster_edge.count() > 0);

  CHECK_THROWS(generate_synthetic_sample(0, 32, 2, 0.5));
}

TEST_CASE("connected components and compaction") {
  BinaryMask b(4, 5);
  b.at(0, 0) = b.at(0, 1) = 1;
  b.at(2, 2) = 1;
  b.at(3, 4) = b.at(2, 4) = 1;
  const InstanceMask cc = connected_components(b);
  CHECK(cc.max_id() == 3);
  CHECK(cc.at(0, 0) == 1);
  CHECK(cc.at(2, 2) == 2);  // raster order of first pixel
  CHECK(cc.at(2, 4) == 3);
  cc.validate();

  InstanceMask m(3, 3);
  m.at(0, 0) = 7;
  m.at(2, 2) = 7;
  m.at(1, 1) = 4;
  const InstanceMask c = compact_instances(m);
  CHECK(c.max_id() == 3);
  c.validate();
}

TEST_CASE("png round trips") {
  const auto dir = std::filesystem::temp_directory_path() / "trinuseg_png_test";
  std::filesystem::remove_all(dir);
  const SyntheticSample s = generate_synthetic_sample(1, 64, 5, 0.5);
  const LabelTriplet t = derive_label_triplet(s.instances);
  write_dataset_sample(dir, "a", s.image, s.instances, t);
  const Image img = read_image_png(dir / "images" / "a.png");
  REQUIRE(img.data.size() == s.image.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(std::abs(img.data[i] - s.image.data[i]) <= 0.5f / 255.0f + 1e-6f);
  CHECK(read_instances_png(dir / "instances" / "a.png") == s.instances);
  CHECK(read_mask_png(dir / "labels" / "a_edge.png") == t.edge);
  CHECK(read_mask_png(dir / "labels" / "a_cluster.png") == t.cluster_edge);

  InstanceMask big(2, 2);
  big.at(0, 0) = 40000;  // needs the full 16 bits
  write_instances_png(dir / "big.png", big);
  CHECK(read_instances_png(dir / "big.png") == big);

  Image rgb(3, 2, 3);
  for (std::size_t i = 0; i < rgb.data.size(); ++i) rgb.data[i] = float(i) / 17.0f;
  write_image_png(dir / "rgb.png", rgb);
  const Image back = read_image_png(dir / "rgb.png");
  CHECK(back.channels == 3);
  CHECK(back.data[5] == doctest::Approx(5.0 / 17.0).epsilon(0.01));

  CHECK_THROWS_AS(read_image_png(dir / "missing.png"), IoError);
  std::filesystem::remove_all(dir);
}
