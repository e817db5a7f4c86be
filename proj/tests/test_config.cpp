#include <doctest.h>

#include <cmath>

#include "confmod/config.hpp"
#include "confmod/errors.hpp"

using namespace confmod;
using namespace confmod::config;
using domains::DomainTag;

namespace {

void check_same(const Config& a, const Config& b) {
    CHECK(a.domain == b.domain);
    REQUIRE(a.scenarios.size() == b.scenarios.size());
    for (std::size_t k = 0; k < a.scenarios.size(); ++k) {
        const auto& x = a.scenarios[k];
        const auto& y = b.scenarios[k];
        INFO(x.id);
        CHECK(x.id == y.id);
        CHECK(x.i.describe() == y.i.describe());
        CHECK(x.j.describe() == y.j.describe());
        CHECK(x.method == y.method);
        CHECK(x.epsilons == y.epsilons);
        CHECK(x.grid_epsilons == y.grid_epsilons);
        CHECK(x.grid.radius == y.grid.radius);
        CHECK(x.grid.height == y.grid.height);
        CHECK(x.grid.h == y.grid.h);
    }
    auto same_boxes = [](const std::vector<currents::NamedBox>& p, const std::vector<currents::NamedBox>& q) {
        REQUIRE(p.size() == q.size());
        for (std::size_t k = 0; k < p.size(); ++k) {
            CHECK(p[k].id == q[k].id);
            CHECK(std::abs(currents::liouville_box(p[k].box) - currents::liouville_box(q[k].box)) < 1e-12);
        }
    };
    same_boxes(a.shrink_boxes, b.shrink_boxes);
    same_boxes(a.stretch_boxes, b.stretch_boxes);
    same_boxes(a.chimney_boxes, b.chimney_boxes);
    CHECK(a.currents_schedule == b.currents_schedule);
    CHECK(a.tolerances.final_gap == b.tolerances.final_gap);
    CHECK(a.output_dir == b.output_dir);
}

const char* minimal = R"(domain: strip
schedule: [0.5, 0.25]
scenarios:
  - id: a
    I: bottom(0,1)
    J: bottom(2,3)
)";

}  // namespace

TEST_CASE("shipped configs match the built-in defaults") {
    check_same(load_config(CONFMOD_SOURCE_DIR "/configs/strip.yaml"), default_config(DomainTag::strip));
    check_same(load_config(CONFMOD_SOURCE_DIR "/configs/chimney.yaml"), default_config(DomainTag::chimney));
}

TEST_CASE("minimal config") {
    auto c = parse_config(minimal);
    REQUIRE(c.scenarios.size() == 1);
    CHECK(c.scenarios[0].method == experiments::Method::elliptic);
    CHECK(c.currents_schedule.size() == 2);
    CHECK(c.shrink_boxes.empty());
    CHECK(c.tolerances.margin == 1e-3);
}

TEST_CASE("arc and prime end literals") {
    auto a = parse_arc(DomainTag::chimney, {"right-wall(1, chimney-top)", "left-wall(1,inf)"});
    CHECK(a.describe() == "right-wall(1,inf) + left-wall(1,inf)");
    auto r = parse_arc(DomainTag::chimney, {"right-ray(1,lower-inf)", "left-ray(lower-inf,-1)"});
    CHECK(r.connected());
    CHECK_THROWS_AS(parse_arc(DomainTag::chimney, {"right-ray(1,chimney-top)"}), validation_error);
    CHECK_THROWS_AS(parse_arc(DomainTag::chimney, {"right-wall(lower-inf,2)"}), validation_error);
    CHECK_THROWS_AS(parse_arc(DomainTag::strip, {"side(0,1)"}), validation_error);
    CHECK_THROWS_AS(parse_arc(DomainTag::strip, {"bottom(0,1"}), validation_error);
    CHECK_THROWS_AS(parse_arc(DomainTag::strip, {"bottom(0,x)"}), validation_error);
    CHECK_THROWS_AS(parse_arc(DomainTag::strip, {}), validation_error);

    CHECK(std::get<domains::ChimneyPrimeEnd>(parse_prime_end(DomainTag::chimney, "chimney-top")) ==
          domains::ChimneyPrimeEnd::chimney_top());
    CHECK(std::get<domains::StripPrimeEnd>(parse_prime_end(DomainTag::strip, "top -1.5")) ==
          domains::StripPrimeEnd::top(-1.5));
    CHECK_THROWS_AS(parse_prime_end(DomainTag::strip, "right-ray 2"), validation_error);
    CHECK_THROWS_AS(parse_prime_end(DomainTag::chimney, "lower"), validation_error);
}

TEST_CASE("errors carry line numbers") {
    auto fails_at = [](const std::string& text, const std::string& where) {
        CHECK_THROWS_WITH_AS(parse_config(text, "cfg"), doctest::Contains(where.c_str()), validation_error);
    };
    fails_at(std::string(minimal) + "colour: red\n", "cfg:7: unknown key 'colour'");
    fails_at(R"(domain: strip
schedule: [0.5, 0.25]
scenarios:
  - id: a
    I: bottom(0,1)
    J: bottom(2,3)
    extra: 1
)",
             "cfg:7");
    fails_at(R"(domain: strip
schedule: [0.5, 0.25]
scenarios:
  - id: a
    I: bottom(0,1)
    J: bottom(2,zz)
)",
             "cfg:6");
    fails_at(R"(domain: strip
schedule: [0.25, 0.5]
scenarios: []
)",
             "cfg:2: epsilon schedule must be strictly decreasing");
    fails_at(R"(domain: strip
schedule: [0.5]
tolerances:
  fit: -1
scenarios: []
)",
             "cfg:4: value must be positive");
    fails_at(R"(domain: strip
schedule: [0.5]
scenarios:
  - id: a
    I: bottom(1,inf)
    J: bottom(-2,0)
)",
             "cfg:4: unclassifiable arc");
    fails_at(R"(domain: chimney
schedule: [0.5]
scenarios:
  - id: a
    I: right-wall(1,inf)
    J: right-ray(1,2)
  - id: a
    I: right-wall(1,inf)
    J: right-ray(1,2)
)",
             "cfg:7: duplicate scenario id");
    fails_at("domain: strip\nschedule: [0.5\n", "cfg:");
    fails_at("domain: disk\nschedule: [0.5]\nscenarios: []\n", "cfg:1: unknown domain");
    fails_at(R"(domain: chimney
schedule: [0.5]
scenarios: []
boxes:
  currents:
    - {id: p, parameter: [0, 1]}
)",
             "cfg:6: parameter boxes exist only on the strip");
    fails_at(R"(domain: strip
schedule: [0.5]
scenarios: []
boxes:
  shrink:
    - {id: p, angles: [1, 2, 3]}
)",
             "cfg:6: angle box needs four angles");
    fails_at(R"(domain: strip
schedule: [0.5]
scenarios: []
truncation_radii: [8, 4]
)",
             "cfg:4");
    CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), validation_error);
}

TEST_CASE("per-scenario overrides") {
    auto c = parse_config(R"(domain: chimney
method: elliptic
schedule: {first: 2, last: 5}
grid_schedule: [0.25]
grid: {radius: 8, height: 4}
scenarios:
  - id: a
    I: right-wall(1,chimney-top)
    J: right-ray(1,2)
    method: grid
    schedule: [0.5, 0.125]
)");
    const auto& s = c.scenarios.at(0);
    CHECK(s.method == experiments::Method::grid);
    CHECK(s.epsilons == std::vector<double>{0.5, 0.125});
    CHECK(s.grid_epsilons == std::vector<double>{0.25});
    CHECK(s.grid.radius == 8);
    CHECK(c.currents_schedule.size() == 4);
}
