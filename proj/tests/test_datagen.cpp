#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "svehnn/datagen.hpp"
#include "svehnn/training.hpp"

using namespace svehnn;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("generate_xi") {
  SUBCASE("class I sits exactly on the vertical axis without jitter") {
    const Dataset d = generate_xi(10, 3, 0.0);
    for (const auto& ex : d.examples) {
      if (ex.label != 0) continue;
      for (const auto& p : ex.input.cloud.points) {
        CHECK(p[0] == 0.0);
        CHECK(p[2] == 0.0);
      }
    }
  }

  SUBCASE("the same seed reproduces the dataset bitwise") {
    const Dataset a = generate_xi(50, 11, 0.05);
    const Dataset b = generate_xi(50, 11, 0.05);
    REQUIRE(a.examples.size() == b.examples.size());
    for (std::size_t e = 0; e < a.examples.size(); ++e) {
      CHECK(a.examples[e].label == b.examples[e].label);
      CHECK(a.examples[e].input.cloud.points == b.examples[e].input.cloud.points);
    }
  }

  SUBCASE("labels are balanced within one") {
    for (int n : {2, 7, 50, 101}) {
      const Dataset d = generate_xi(n, 1, 0.01);
      CHECK(std::abs(d.manifest.class_counts[0] - d.manifest.class_counts[1]) <= 1);
      CHECK(d.manifest.class_counts[0] + d.manifest.class_counts[1] == n);
    }
  }

  SUBCASE("jitter-free X clouds are mirror symmetric as point sets") {
    const Dataset d = generate_xi(4, 2, 0.0);
    for (const auto& ex : d.examples) {
      if (ex.label != 1) continue;
      for (const auto& p : ex.input.cloud.points) {
        const Point3 mirrored{-p[0], p[1], p[2]};
        bool found = false;
        for (const auto& q : ex.input.cloud.points) {
          if (std::abs(q[0] - mirrored[0]) < 1e-12 &&
              std::abs(q[1] - mirrored[1]) < 1e-12 && q[2] == mirrored[2]) {
            found = true;
            break;
          }
        }
        CHECK(found);
      }
    }
  }

  SUBCASE("every cloud has sixteen points at z = 0") {
    const Dataset d = generate_xi(6, 5, 0.1);
    for (const auto& ex : d.examples) {
      CHECK(ex.input.cloud.size() == 16);
      CHECK(ex.input.tabular.size() == 0);
      for (const auto& p : ex.input.cloud.points) CHECK(p[2] == 0.0);
    }
  }

  SUBCASE("argument guards") {
    CHECK_THROWS_AS(generate_xi(1, 0, 0.0), DomainError);
    CHECK_THROWS_AS(generate_xi(10, 0, -0.1), DomainError);
  }
}

TEST_CASE("generate_hetero") {
  SUBCASE("informative flags match the requested count") {
    const Dataset d = generate_hetero(20, 8, 8, 7);
    REQUIRE(d.manifest.informative.has_value());
    int informative = 0;
    for (bool b : *d.manifest.informative) informative += b ? 1 : 0;
    CHECK(informative == 4);  // default D/2
  }

  SUBCASE("noise-only columns carry all-false flags") {
    const Dataset d = generate_hetero(10, 6, 3, 7, 0);
    REQUIRE(d.manifest.informative.has_value());
    for (bool b : *d.manifest.informative) CHECK_FALSE(b);
  }

  SUBCASE("same seed reproducibility") {
    const Dataset a = generate_hetero(15, 6, 4, 99);
    const Dataset b = generate_hetero(15, 6, 4, 99);
    for (std::size_t e = 0; e < a.examples.size(); ++e) {
      CHECK(a.examples[e].input.cloud.points == b.examples[e].input.cloud.points);
      CHECK(a.examples[e].input.tabular.values == b.examples[e].input.tabular.values);
    }
  }

  SUBCASE("argument guards") {
    CHECK_THROWS_AS(generate_hetero(10, 3, 2, 1), DomainError);
    CHECK_THROWS_AS(generate_hetero(10, 4, 0, 1), DomainError);
    CHECK_THROWS_AS(generate_hetero(10, 4, 2, 1, 5), DomainError);
  }
}

TEST_CASE("generated tasks are separable") {
  SUBCASE("a trained classifier fits the X/I clouds") {
    const Dataset d = generate_xi(400, 7, 0.05);
    TrainConfig config;
    config.epochs = 40;
    config.seed = 1;
    const auto [model, report] = train(d.examples, 16, 0, ArchSpec{}, config);
    CHECK(balanced_accuracy(model, d.examples) >= 0.99);
  }

  SUBCASE("the heterogeneous task trains past 0.9 balanced accuracy") {
    const Dataset d = generate_hetero(1000, 64, 8, 7);
    TrainConfig config;
    config.epochs = 10;
    config.seed = 1;
    const auto [model, report] = train(d.examples, 64, 8, ArchSpec{}, config);
    CHECK(report.balanced_accuracy >= 0.9);
  }
}

TEST_CASE("dataset IO") {
  const std::string path = temp_path("svehnn_io_test.ndjson");

  SUBCASE("write then read reproduces examples bitwise") {
    const Dataset d = generate_xi(30, 17, 0.07);
    write_dataset(d, path);
    const Dataset back = read_dataset(path);
    CHECK(back.manifest.generator == "xi");
    CHECK(back.manifest.n_examples == 30);
    CHECK(back.manifest.seed == 17);
    REQUIRE(back.examples.size() == d.examples.size());
    for (std::size_t e = 0; e < d.examples.size(); ++e) {
      CHECK(back.examples[e].label == d.examples[e].label);
      CHECK(back.examples[e].input.cloud.points ==
            d.examples[e].input.cloud.points);
      CHECK(back.examples[e].input.tabular.values ==
            d.examples[e].input.tabular.values);
    }
    std::filesystem::remove(path);
  }

  SUBCASE("hetero manifests round trip the informativeness flags") {
    const Dataset d = generate_hetero(8, 5, 3, 23, 2);
    write_dataset(d, path);
    const Dataset back = read_dataset(path);
    REQUIRE(back.manifest.informative.has_value());
    CHECK(*back.manifest.informative == *d.manifest.informative);
    std::filesystem::remove(path);
  }

  SUBCASE("truncated files fail the integrity check") {
    const Dataset d = generate_xi(10, 3, 0.0);
    write_dataset(d, path);
    std::ifstream in(path);
    std::string all((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
    in.close();
    const auto cut = all.rfind('{');
    std::ofstream out(path, std::ios::trunc);
    out << all.substr(0, cut);
    out.close();
    CHECK_THROWS_AS(read_dataset(path), IntegrityError);
    std::filesystem::remove(path);
  }

  SUBCASE("malformed records report the offending line") {
    std::ofstream out(path, std::ios::trunc);
    out << R"({"kind":"svehnn-dataset","format_version":1,"generator":"xi",)"
        << R"("n_examples":1,"K":1,"D":0,"seed":0,"class_counts":[1,0]})" << "\n";
    out << "this is not json\n";
    out.close();
    try {
      read_dataset(path);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
    std::filesystem::remove(path);
  }

  SUBCASE("empty datasets are rejected at write time") {
    Dataset empty;
    empty.manifest.generator = "xi";
    empty.manifest.n_examples = 0;
    CHECK_THROWS_AS(write_dataset(empty, path), DomainError);
  }

  SUBCASE("missing files surface as parse errors") {
    CHECK_THROWS_AS(read_dataset(temp_path("does_not_exist.ndjson")), ParseError);
  }
}
