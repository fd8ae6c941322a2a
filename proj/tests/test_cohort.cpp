#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "costyle/data/cohort.hpp"
#include "costyle/data/synth.hpp"

using namespace costyle;
using namespace costyle::data;

namespace {

std::filesystem::path temp_csv(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << body;
  return path;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Cohort tiny_cohort() {
  // three subjects, two modalities, P = 3
  Cohort c;
  c.modalities = {"CT", "FDG"};
  c.labels = {"CN", "EMCI"};
  c.roi_count = 3;
  SubjectRecord a{"s1", 0, {std::vector<double>{1.0, 5.0, 0.25}, std::vector<double>{2.0, 5.0, -1.0}}};
  SubjectRecord b{"s2", 1, {std::vector<double>{2.0, 5.0, 0.5}, std::nullopt}};
  SubjectRecord d{"s3", 0, {std::vector<double>{3.0, 5.0, 0.75}, std::vector<double>{4.0, 5.0, 1.0}}};
  c.subjects = {a, b, d};
  return c;
}

}  // namespace

TEST_CASE("two rows for one subject become one record with a partial mask") {
  const auto path = temp_csv(
      "costyle_parse.csv",
      "subject_id,label,modality,f000,f001\n"
      "s1,CN,CT,0.5,1.5\n"
      "s1,CN,FDG,-0.25,2\n");
  const Cohort c = load_cohort(path, {{"CT", "Tau", "FDG"}, {"CN", "EMCI"}});
  REQUIRE(c.subjects.size() == 1);
  CHECK(c.roi_count == 2);
  CHECK(c.subjects[0].has(0));
  CHECK(!c.subjects[0].has(1));
  CHECK(c.subjects[0].has(2));
  CHECK((*c.subjects[0].features[0])[1] == 1.5);
  std::filesystem::remove(path);
}

TEST_CASE("empty data section is rejected") {
  const auto path = temp_csv("costyle_empty.csv", "subject_id,label,modality,f000\n");
  CHECK_THROWS_WITH_AS(load_cohort(path), doctest::Contains("no subjects"),
                       DataError);
  std::filesystem::remove(path);
}

TEST_CASE("malformed rows name the offending line") {
  const std::string header = "subject_id,label,modality,f000,f001\n";
  const auto wrong_cols = temp_csv("costyle_cols.csv", header + "s1,CN,CT,1.0\n");
  CHECK_THROWS_WITH_AS(load_cohort(wrong_cols), doctest::Contains("line 2"),
                       DataError);

  const auto bad_cell =
      temp_csv("costyle_cell.csv", header + "s1,CN,CT,1.0,abc\n");
  CHECK_THROWS_WITH_AS(load_cohort(bad_cell), doctest::Contains("non-numeric"),
                       DataError);

  const auto dup = temp_csv("costyle_dup.csv",
                            header + "s1,CN,CT,1,2\ns1,CN,CT,3,4\n");
  CHECK_THROWS_WITH_AS(load_cohort(dup), doctest::Contains("duplicate"),
                       DataError);

  const auto unknown = temp_csv("costyle_unk.csv", header + "s1,CN,PET,1,2\n");
  CHECK_THROWS_WITH_AS(load_cohort(unknown, {{"CT", "FDG"}, {}}),
                       doctest::Contains("unknown modality"), DataError);

  const auto bad_label = temp_csv("costyle_lbl.csv", header + "s1,XX,CT,1,2\n");
  CHECK_THROWS_WITH_AS(load_cohort(bad_label, {{}, {"CN", "EMCI"}}),
                       doctest::Contains("unknown label"), DataError);

  for (const auto& p : {wrong_cols, bad_cell, dup, unknown, bad_label})
    std::filesystem::remove(p);
}

TEST_CASE("save/load round-trips a synthetic cohort bit-exactly") {
  SynthSpec spec;
  spec.subjects_per_class = {7, 6, 5};
  spec.roi_count = 9;
  spec.content_dim = 4;
  spec.missingness = {0.3, 0.0, 0.2, 0.4};
  spec.seed = 77;
  const auto [cohort, truth] = synth_cohort(spec);

  const auto path = std::filesystem::temp_directory_path() / "costyle_rt.csv";
  save_cohort(cohort, path);
  const Cohort loaded = load_cohort(path, {cohort.modalities, cohort.labels});

  REQUIRE(loaded.subjects.size() == cohort.subjects.size());
  CHECK(loaded.modalities == cohort.modalities);
  CHECK(loaded.labels == cohort.labels);
  for (std::size_t i = 0; i < cohort.subjects.size(); ++i) {
    CHECK(loaded.subjects[i].subject_id == cohort.subjects[i].subject_id);
    CHECK(loaded.subjects[i].label == cohort.subjects[i].label);
    CHECK(loaded.subjects[i].features == cohort.subjects[i].features);
  }

  // and a second save produces identical bytes
  const auto path2 = std::filesystem::temp_directory_path() / "costyle_rt2.csv";
  save_cohort(loaded, path2);
  CHECK(read_file(path) == read_file(path2));
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("standardize maps (1,2,3) to (-1,0,1) and flags constant columns") {
  const Cohort c = tiny_cohort();
  const auto [std_c, stats] = standardize(c);

  // modality CT roi 0 over (1,2,3)
  CHECK((*std_c.subjects[0].features[0])[0] == -1.0);
  CHECK((*std_c.subjects[1].features[0])[0] == 0.0);
  CHECK((*std_c.subjects[2].features[0])[0] == 1.0);

  // constant column (5,5,5) maps to 0 with stddev sentinel 0
  CHECK(stats.stddev[0][1] == 0.0);
  CHECK((*std_c.subjects[0].features[0])[1] == 0.0);
  CHECK((*std_c.subjects[2].features[0])[1] == 0.0);

  // present-value mean 0 / sample sd 1 for non-constant columns
  double mean = 0.0;
  for (int i : {0, 1, 2}) mean += (*std_c.subjects[i].features[0])[2];
  CHECK(std::abs(mean / 3.0) < 1e-9);
}

TEST_CASE("standardize requires two present values per column") {
  Cohort c = tiny_cohort();
  c.subjects[0].features[1].reset();
  c.subjects[2].features[1].reset();  // FDG now has a single present subject
  c.subjects[1].features[1] = std::vector<double>{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(standardize(c), DataError);
}

TEST_CASE("inverse standardization restores the original values") {
  SynthSpec spec;
  spec.subjects_per_class = {8, 8, 8};
  spec.roi_count = 6;
  spec.content_dim = 3;
  spec.missingness = {0.2, 0.2, 0.0, 0.1};
  spec.seed = 5;
  const auto [cohort, truth] = synth_cohort(spec);
  const auto [std_c, stats] = standardize(cohort);
  const Cohort back = inverse_standardize(std_c, stats);
  for (std::size_t i = 0; i < cohort.subjects.size(); ++i) {
    for (int m = 0; m < cohort.modality_count(); ++m) {
      if (!cohort.subjects[i].has(m)) {
        CHECK(!back.subjects[i].has(m));
        continue;
      }
      for (int r = 0; r < cohort.roi_count; ++r) {
        CHECK((*back.subjects[i].features[m])[r] ==
              doctest::Approx((*cohort.subjects[i].features[m])[r]).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("standardize is idempotent when re-applied") {
  SynthSpec spec;
  spec.subjects_per_class = {10, 10, 10};
  spec.roi_count = 5;
  spec.content_dim = 3;
  spec.seed = 19;
  const auto [cohort, truth] = synth_cohort(spec);
  const auto [once, stats1] = standardize(cohort);
  const auto [twice, stats2] = standardize(once);
  for (std::size_t i = 0; i < once.subjects.size(); ++i) {
    for (int m = 0; m < once.modality_count(); ++m) {
      for (int r = 0; r < once.roi_count; ++r) {
        CHECK((*twice.subjects[i].features[m])[r] ==
              doctest::Approx((*once.subjects[i].features[m])[r]).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("cohort validation catches broken records") {
  Cohort c = tiny_cohort();
  c.subjects[1].features[0].reset();  // s2 now has nothing observed
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("s2"), DataError);

  Cohort short_vec = tiny_cohort();
  short_vec.subjects[0].features[0]->pop_back();
  CHECK_THROWS_AS(short_vec.validate(), DataError);

  Cohort single = tiny_cohort();
  single.modalities = {"CT"};
  CHECK_THROWS_AS(single.validate(), DataError);
}

TEST_CASE("subset keeps order and metadata") {
  const Cohort c = tiny_cohort();
  const Cohort sub = c.subset({2, 0});
  REQUIRE(sub.subjects.size() == 2);
  CHECK(sub.subjects[0].subject_id == "s3");
  CHECK(sub.subjects[1].subject_id == "s1");
  CHECK(sub.modalities == c.modalities);
  CHECK(c.complete_subjects() == std::vector<int>{0, 2});
  CHECK(c.incomplete_subjects() == std::vector<int>{1});
}
