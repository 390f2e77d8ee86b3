#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include <doctest.h>

#include "pda/data.hpp"
#include "pda/errors.hpp"

using namespace pda;
using namespace pda::data;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "pda_test_data";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

}  // namespace

TEST_CASE("synthetic generation") {
  PartialTaskSpec spec;
  spec.seed = 3;
  const DomainPair pair = generate_synthetic(spec);
  CHECK(pair.source.size() == 500);
  CHECK(pair.target.size() == 300);
  CHECK(pair.source.classes() == std::vector<int>{0, 1, 2, 3, 4});
  for (int y : pair.target.evaluation_labels()) CHECK((y >= 0 && y <= 2));

  const DomainPair again = generate_synthetic(spec);
  CHECK(again.source.features() == pair.source.features());
  CHECK(again.target.features() == pair.target.features());

  spec.target_classes = {1, 7};
  CHECK_THROWS_AS(generate_synthetic(spec), UsageError);
}

TEST_CASE("no shift and no noise keep the class means in place") {
  PartialTaskSpec spec;
  spec.seed = 1;
  spec.rotation_deg = 0.0;
  spec.noise = 0.0;
  spec.samples_per_class = 400;
  const DomainPair pair = generate_synthetic(spec);
  // Both domains draw from the same blobs, so the sample means agree up to
  // sampling error; the population means are the generator's class centers.
  for (int c : spec.target_classes) {
    const auto mu = class_center(spec, c);
    for (const Dataset* d : {&pair.source, &pair.target}) {
      std::vector<double> mean(spec.dim, 0.0);
      std::size_t n = 0;
      for (std::size_t i = 0; i < d->size(); ++i) {
        if (d->evaluation_labels()[i] != c) continue;
        ++n;
        for (std::size_t j = 0; j < spec.dim; ++j) mean[j] += d->features().at(i, j);
      }
      for (std::size_t j = 0; j < spec.dim; ++j) CHECK(std::abs(mean[j] / static_cast<double>(n) - mu[j]) < 0.2);
    }
  }
  const auto mu = class_center(spec, 2);
  CHECK(apply_shift(spec, mu) == mu);
}

TEST_CASE("target datasets contain only shared classes") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    PartialTaskSpec spec;
    spec.seed = seed;
    spec.num_source_classes = 6;
    spec.target_classes = {1, 4};
    const DomainPair pair = generate_synthetic(spec);
    const auto shared = spec.shared_classes();
    for (int y : pair.target.evaluation_labels()) CHECK(std::binary_search(shared.begin(), shared.end(), y));
    CHECK(pair.source.classes().size() == 6);
    CHECK(spec.private_classes() == std::vector<int>{0, 2, 3, 5});
  }
}

TEST_CASE("target labels are firewalled") {
  PartialTaskSpec spec;
  const DomainPair pair = generate_synthetic(spec);
  CHECK_THROWS_AS(pair.target.labels(), UsageError);
  CHECK_NOTHROW(pair.source.labels());
  CHECK(pair.target.evaluation_labels().size() == 300);
}

TEST_CASE("csv round trip keeps full precision") {
  PartialTaskSpec spec;
  spec.seed = 9;
  spec.samples_per_class = 7;
  const DomainPair pair = generate_synthetic(spec);
  const auto path = scratch("roundtrip.csv");
  write_csv(path, pair.target);
  const Dataset back = load_csv(path, Domain::target);
  CHECK(back.features() == pair.target.features());
  CHECK(std::equal(back.evaluation_labels().begin(), back.evaluation_labels().end(),
                   pair.target.evaluation_labels().begin()));
  CHECK(back.domain() == Domain::target);
}

TEST_CASE("csv parsing") {
  SUBCASE("three well-formed rows") {
    const auto p = scratch("three.csv");
    write_file(p, "f0,f1,label\n1,2,0\n3,4,1\n5,6,0\n");
    const Dataset d = load_csv(p, Domain::source);
    CHECK(d.size() == 3);
    CHECK(d.dim() == 2);
  }
  SUBCASE("short row names its line") {
    const auto p = scratch("short.csv");
    write_file(p, "f0,f1,label\n1,2,0\n3,1\n");
    try {
      load_csv(p, Domain::source);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("non-numeric feature") {
    const auto p = scratch("word.csv");
    write_file(p, "f0,f1,label\n1,abc,0\n");
    CHECK_THROWS_AS(load_csv(p, Domain::source), ParseError);
  }
  SUBCASE("missing header") {
    const auto p = scratch("noheader.csv");
    write_file(p, "1,2,0\n");
    CHECK_THROWS_AS(load_csv(p, Domain::source), ParseError);
  }
  SUBCASE("header only is an empty dataset") {
    const auto p = scratch("empty.csv");
    write_file(p, "f0,f1,label\n");
    CHECK(load_csv(p, Domain::target).empty());
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_csv(scratch("does_not_exist.csv"), Domain::source), IoError);
  }
}

TEST_CASE("batch sampler") {
  SUBCASE("full-size batch is a permutation") {
    BatchSampler s(17, 4);
    auto idx = s.next(17);
    std::sort(idx.begin(), idx.end());
    std::vector<std::size_t> all(17);
    std::iota(all.begin(), all.end(), 0);
    CHECK(idx == all);
  }
  SUBCASE("an epoch partitions the index set") {
    BatchSampler s(23, 8);
    std::multiset<std::size_t> seen;
    while (seen.size() < 23) {
      for (std::size_t i : s.next(5)) seen.insert(i);
    }
    CHECK(seen.size() == 23);
    for (std::size_t i = 0; i < 23; ++i) CHECK(seen.count(i) == 1);
  }
  SUBCASE("same seed, same sequence over several epochs") {
    BatchSampler a(10, 5), b(10, 5);
    for (int i = 0; i < 12; ++i) CHECK(a.next(4) == b.next(4));
    CHECK(a.epoch() == b.epoch());
    CHECK(a.epoch() >= 2);
  }
}

TEST_CASE("manifest round trip") {
  PartialTaskSpec spec;
  spec.seed = 12;
  spec.translation = {0.5, -1.0};
  const PartialTaskSpec back = spec_from_manifest(manifest(spec));
  CHECK(back.seed == 12);
  CHECK(back.target_classes == spec.target_classes);
  CHECK(back.rotation_deg == spec.rotation_deg);
  CHECK(back.translation == spec.translation);
}
