#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "proprep/panel.hpp"
#include "proprep/sim.hpp"

using namespace proprep;

namespace {

PanelSchema one_numeric() {
    PanelSchema schema;
    schema.covariates.push_back({"x", CovariateKind::Numeric, false, {}, ""});
    return schema;
}

PanelDataset load(const std::string& csv, const PanelSchema& schema) {
    std::istringstream in(csv);
    return load_panel(in, schema);
}

}  // namespace

TEST_CASE("clean two-subject panel loads with n=2, K=3") {
    const auto panel = load(
        "id,k,x,B,H,C,Y\n"
        "a,1,0.5,0,0,0,0\n"
        "a,2,0.6,1,0,0,0\n"
        "a,3,0.7,0,0,0,0\n"
        "b,1,0.1,0,1,0,0\n"
        "b,2,0.2,0,0,0,0\n"
        "b,3,0.3,0,0,0,1\n",
        one_numeric());
    CHECK(panel.n_subjects() == 2);
    CHECK(panel.horizon == 3);
    CHECK(panel.n_records() == 6);
}

TEST_CASE("rows may arrive unordered") {
    const auto panel = load(
        "id,k,x,B,H,C,Y\n"
        "a,2,2,0,0,0,1\n"
        "a,1,1,0,0,0,0\n",
        one_numeric());
    CHECK(panel.subjects[0].records[0].k == 1);
    CHECK(panel.subjects[0].records[1].Y);
}

TEST_CASE("load errors") {
    SUBCASE("missing column") {
        CHECK_THROWS_WITH_AS(load("id,k,x,B,H,C\na,1,1,0,0,0\n", one_numeric()),
                             doctest::Contains("missing column 'Y'"), DataError);
    }
    SUBCASE("non-binary flag") {
        CHECK_THROWS_WITH_AS(load("id,k,x,B,H,C,Y\na,1,1,2,0,0,0\n", one_numeric()),
                             doctest::Contains("non-binary"), DataError);
    }
    SUBCASE("duplicate subject-interval") {
        CHECK_THROWS_WITH_AS(
            load("id,k,x,B,H,C,Y\na,1,1,0,0,0,0\na,1,2,0,0,0,0\n", one_numeric()),
            doctest::Contains("duplicate record"), DataError);
    }
    SUBCASE("gap in intervals") {
        CHECK_THROWS_WITH_AS(
            load("id,k,x,B,H,C,Y\na,1,1,0,0,0,0\na,3,2,0,0,0,0\n", one_numeric()),
            doctest::Contains("consecutive"), DataError);
    }
    SUBCASE("second treatment violates the single-dose rule") {
        CHECK_THROWS_WITH_AS(
            load("id,k,x,B,H,C,Y\na,1,1,0,0,0,0\na,2,1,1,0,0,0\na,3,1,0,1,0,0\n", one_numeric()),
            doctest::Contains("single-dose"), DataError);
    }
    SUBCASE("both treatments in one interval") {
        CHECK_THROWS_WITH_AS(load("id,k,x,B,H,C,Y\na,1,1,1,1,0,0\n", one_numeric()),
                             doctest::Contains("B and H both 1"), DataError);
    }
    SUBCASE("records after death") {
        CHECK_THROWS_WITH_AS(
            load("id,k,x,B,H,C,Y\na,1,1,0,0,0,1\na,2,1,0,0,0,0\n", one_numeric()),
            doctest::Contains("after death"), DataError);
    }
    SUBCASE("records after censoring") {
        CHECK_THROWS_WITH_AS(
            load("id,k,x,B,H,C,Y\na,1,1,0,0,1,0\na,2,1,0,0,1,0\n", one_numeric()),
            doctest::Contains("after censoring"), DataError);
    }
    SUBCASE("death in the censoring interval") {
        CHECK_THROWS_WITH_AS(load("id,k,x,B,H,C,Y\na,1,1,0,0,1,1\n", one_numeric()),
                             doctest::Contains("unobservable"), DataError);
    }
    SUBCASE("empty field") {
        CHECK_THROWS_WITH_AS(load("id,k,x,B,H,C,Y\na,1,,0,0,0,0\n", one_numeric()),
                             doctest::Contains("empty field"), DataError);
    }
    SUBCASE("unknown categorical level") {
        PanelSchema schema;
        schema.covariates.push_back(
            {"g", CovariateKind::Categorical, false, {"lo", "hi"}, "lo"});
        CHECK_THROWS_WITH_AS(load("id,k,g,B,H,C,Y\na,1,mid,0,0,0,0\n", schema),
                             doctest::Contains("unknown level"), DataError);
    }
    SUBCASE("baseline covariate varies") {
        PanelSchema schema;
        schema.covariates.push_back({"x", CovariateKind::Numeric, true, {}, ""});
        CHECK_THROWS_WITH_AS(
            load("id,k,x,B,H,C,Y\na,1,1,0,0,0,0\na,2,2,0,0,0,0\n", schema),
            doctest::Contains("varies"), DataError);
    }
}

TEST_CASE("eligibility derivation") {
    SUBCASE("R_1 = 1 and S_1 = 1 - B_1") {
        const auto panel = load("id,k,x,B,H,C,Y\na,1,1,1,0,0,0\nb,1,1,0,0,0,0\n", one_numeric());
        CHECK(panel.subjects[0].records[0].R);
        CHECK_FALSE(panel.subjects[0].records[0].S);
        CHECK(panel.subjects[1].records[0].R);
        CHECK(panel.subjects[1].records[0].S);
    }
    SUBCASE("B at k=1 zeroes later eligibility") {
        const auto panel =
            load("id,k,x,B,H,C,Y\na,1,1,1,0,0,0\na,2,1,0,0,0,0\n", one_numeric());
        CHECK_FALSE(panel.subjects[0].records[1].R);
        CHECK_FALSE(panel.subjects[0].records[1].S);
    }
    SUBCASE("H at k=1 keeps S_1 but zeroes R_2") {
        const auto panel =
            load("id,k,x,B,H,C,Y\na,1,1,0,1,0,0\na,2,1,0,0,0,0\n", one_numeric());
        CHECK(panel.subjects[0].records[0].S);
        CHECK_FALSE(panel.subjects[0].records[1].R);
        CHECK_FALSE(panel.subjects[0].records[1].S);
    }
}

TEST_CASE("derived eligibility matches a brute-force history scan") {
    RandomDgmOptions opt;
    opt.K = 3;
    opt.censoring = true;
    const auto dgm = random_dgm(99, opt);
    const auto panel = sample_panel(dgm, 500, 4242);
    for (const auto& subj : panel.subjects) {
        bool prior_treatment = false;
        for (const auto& rec : subj.records) {
            CHECK(rec.R == !prior_treatment);
            CHECK(rec.S == (rec.R && !rec.B));
            prior_treatment = prior_treatment || rec.B || rec.H;
        }
    }
}

TEST_CASE("serialize then load is the identity") {
    RandomDgmOptions opt;
    opt.K = 3;
    opt.censoring = true;
    const auto panel = sample_panel(random_dgm(7, opt), 200, 11);
    std::ostringstream out;
    save_panel(panel, out);
    std::istringstream in(out.str());
    const auto reloaded = load_panel(in, panel.schema);
    REQUIRE(reloaded.n_subjects() == panel.n_subjects());
    REQUIRE(reloaded.horizon == panel.horizon);
    for (std::size_t i = 0; i < panel.subjects.size(); ++i) {
        const auto& a = panel.subjects[i];
        const auto& b = reloaded.subjects[i];
        REQUIRE(a.records.size() == b.records.size());
        for (std::size_t r = 0; r < a.records.size(); ++r) {
            CHECK(a.records[r].covs == b.records[r].covs);
            CHECK(a.records[r].B == b.records[r].B);
            CHECK(a.records[r].H == b.records[r].H);
            CHECK(a.records[r].C == b.records[r].C);
            CHECK(a.records[r].Y == b.records[r].Y);
            CHECK(a.records[r].R == b.records[r].R);
            CHECK(a.records[r].S == b.records[r].S);
        }
    }
}

TEST_CASE("record count per subject follows the terminal-event convention") {
    RandomDgmOptions opt;
    opt.K = 3;
    opt.censoring = true;
    const auto panel = sample_panel(random_dgm(13, opt), 400, 5);
    for (const auto& subj : panel.subjects) {
        const auto& last = subj.records.back();
        if (last.Y || last.C)
            CHECK(last.k == static_cast<int>(subj.records.size()));
        else
            CHECK(static_cast<int>(subj.records.size()) == panel.horizon);
        for (std::size_t r = 0; r + 1 < subj.records.size(); ++r) {
            CHECK_FALSE(subj.records[r].Y);
            CHECK_FALSE(subj.records[r].C);
        }
    }
}

TEST_CASE("truncate_horizon") {
    const auto panel = load(
        "id,k,x,B,H,C,Y\n"
        "a,1,1,0,0,0,0\na,2,1,0,0,0,0\na,3,1,0,0,0,0\na,4,1,0,0,0,0\na,5,1,0,0,0,1\n",
        one_numeric());
    SUBCASE("identity at the existing maximum") {
        const auto same = truncate_horizon(panel, 5);
        CHECK(same.n_records() == 5);
        CHECK(same.horizon == 5);
    }
    SUBCASE("death beyond the horizon leaves an administratively complete subject") {
        const auto cut = truncate_horizon(panel, 3);
        CHECK(cut.horizon == 3);
        REQUIRE(cut.subjects[0].records.size() == 3);
        CHECK_FALSE(cut.subjects[0].records.back().Y);
    }
    SUBCASE("K < 1 rejected") { CHECK_THROWS_AS(truncate_horizon(panel, 0), ConfigError); }
}
