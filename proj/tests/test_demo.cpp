#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fskill/demo.hpp"
#include "support.hpp"

using namespace fskill;
using testing::Rng;

namespace {

namespace fs = std::filesystem;

fs::path tmp_dir() {
  const fs::path dir = fs::path(FSKILL_TEST_TMP) / "demo";
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Analytically consistent demo: smooth position, constant-rate rotation
// about z, zero wrench, fixed object pose.
Demonstration make_demo(int n, double dt) {
  Demonstration demo;
  demo.id = "synthetic";
  demo.sample_rate = 1.0 / dt;
  for (int i = 0; i < n; ++i) {
    const double t = i * dt;
    ObservationPoint p;
    p.time = t;
    PosePoint pose;
    pose.position = Vec3(0.1 * t, std::sin(0.2 * t), 0.05 * t * t);
    pose.orientation = quat_exp(Vec3(0.0, 0.0, 0.3 * t));
    p.x = pose.to_ambient();
    p.twist = (Vec(6) << 0.1, 0.2 * std::cos(0.2 * t), 0.1 * t, 0.0, 0.0, 0.3)
                  .finished();
    p.accel = (Vec(6) << 0.0, -0.04 * std::sin(0.2 * t), 0.1, 0.0, 0.0, 0.0)
                  .finished();
    p.wrench = Vec::Zero(6);
    PosePoint object;
    object.position = Vec3(0.5, -0.2, 0.0);
    p.object_pose = object.to_ambient();
    demo.points.push_back(p);
  }
  return demo;
}

}  // namespace

TEST_SUITE("demo") {

TEST_CASE("save then load is bit identical") {
  const Demonstration demo = make_demo(50, 0.01);
  const fs::path a = tmp_dir() / "roundtrip_a.txt";
  const fs::path b = tmp_dir() / "roundtrip_b.txt";
  save_demonstration(demo, a);
  const Demonstration loaded = load_demonstration(a);
  save_demonstration(loaded, b);
  CHECK(read_file(a) == read_file(b));

  REQUIRE(loaded.points.size() == demo.points.size());
  for (std::size_t i = 0; i < demo.points.size(); ++i) {
    CHECK(loaded.points[i].time == demo.points[i].time);
    CHECK((loaded.points[i].x - demo.points[i].x).norm() == 0.0);
    CHECK((loaded.points[i].twist - demo.points[i].twist).norm() == 0.0);
    CHECK((loaded.points[i].accel - demo.points[i].accel).norm() == 0.0);
    CHECK((loaded.points[i].wrench - demo.points[i].wrench).norm() == 0.0);
  }
}

TEST_CASE("sample rate is inferred from 0.01 s spacing") {
  Demonstration demo = make_demo(30, 0.01);
  const fs::path p = tmp_dir() / "rate.txt";
  save_demonstration(demo, p);
  // Strip the metadata so the loader has to infer the rate.
  std::string text = read_file(p);
  std::string stripped;
  for (std::size_t i = 0; i < text.size();) {
    std::size_t end = text.find('\n', i);
    end = (end == std::string::npos) ? text.size() : end + 1;
    if (text[i] != '#') {
      stripped.append(text, i, end - i);
    }
    i = end;
  }
  std::ofstream(p) << stripped;
  const Demonstration loaded = load_demonstration(p);
  CHECK(loaded.sample_rate == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("degenerate files are rejected with context") {
  const fs::path dir = tmp_dir();
  const fs::path empty = dir / "empty.txt";
  std::ofstream(empty) << "# nothing here\n";
  CHECK_THROWS_WITH_AS(load_demonstration(empty),
                       doctest::Contains("no demonstrations"), FormatError);

  const fs::path missing = dir / "does_not_exist.txt";
  CHECK_THROWS_AS(load_demonstration(missing), IoError);

  Demonstration demo = make_demo(5, 0.01);
  const fs::path malformed = dir / "malformed.txt";
  save_demonstration(demo, malformed);
  std::ofstream(malformed, std::ios::app) << "0.06 1 2 3\n";
  CHECK_THROWS_WITH_AS(load_demonstration(malformed), doctest::Contains(":10:"),
                       FormatError);

  const fs::path backwards = dir / "backwards.txt";
  {
    Demonstration bad = make_demo(5, 0.01);
    bad.points[3].time = bad.points[1].time;
    std::string text;
    for (const auto& pt : bad.points) {
      text += format_double(pt.time);
      for (const Vec* block :
           {&pt.x, &pt.twist, &pt.accel, &pt.wrench, &pt.object_pose}) {
        for (int k = 0; k < block->size(); ++k) {
          text += " " + format_double((*block)(k));
        }
      }
      text += "\n";
    }
    std::ofstream(backwards) << text;
  }
  CHECK_THROWS_WITH_AS(load_demonstration(backwards),
                       doctest::Contains("strictly increasing"), FormatError);

  const fs::path nan_file = dir / "nan.txt";
  {
    std::string text = read_file(malformed);
    // Drop the malformed tail line, then poison one wrench entry.
    text.erase(text.rfind("0.06"));
    const std::size_t pos = text.find("0 0 0 0 0 0 0.5");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 1, "nan");
    std::ofstream(nan_file) << text;
  }
  CHECK_THROWS_WITH_AS(load_demonstration(nan_file),
                       doctest::Contains("non-finite"), FormatError);
}

TEST_CASE("27-column logs get finite-difference accelerations") {
  // Linear twist makes the central difference exact everywhere, including
  // the one-sided boundary stencils and the moving average.
  Demonstration demo = make_demo(20, 0.01);
  for (auto& p : demo.points) {
    p.twist = (Vec(6) << 2.0 * p.time, 0.5, -p.time, 0.0, 0.1 * p.time, 0.0)
                  .finished();
  }
  const fs::path p27 = tmp_dir() / "short.txt";
  {
    std::string text = "# sample_rate: 100\n";
    for (const auto& pt : demo.points) {
      text += format_double(pt.time);
      for (const Vec* block : {&pt.x, &pt.twist, &pt.wrench, &pt.object_pose}) {
        for (int k = 0; k < block->size(); ++k) {
          text += " " + format_double((*block)(k));
        }
      }
      text += "\n";
    }
    std::ofstream(p27) << text;
  }
  const Demonstration loaded = load_demonstration(p27);
  const Vec want = (Vec(6) << 2.0, 0.0, -1.0, 0.0, 0.1, 0.0).finished();
  for (const auto& pt : loaded.points) {
    CHECK((pt.accel - want).norm() < 1e-9);
  }
}

TEST_CASE("load_demonstrations reads a directory in name order") {
  const fs::path dir = tmp_dir() / "set";
  fs::create_directories(dir);
  for (int i = 0; i < 3; ++i) {
    Demonstration demo = make_demo(10, 0.01);
    demo.id = "demo" + std::to_string(i);
    save_demonstration(demo, dir / ("demo" + std::to_string(i) + ".txt"));
  }
  const auto demos = load_demonstrations(dir);
  REQUIRE(demos.size() == 3);
  CHECK(demos[0].id == "demo0");
  CHECK(demos[2].id == "demo2");
  CHECK_THROWS_AS(load_demonstrations(dir / "nope"), IoError);
}

TEST_CASE("frame projection: identity, translation, round trip") {
  auto geom = Geometry::pose();
  Rng rng(211);
  const Demonstration demo = make_demo(25, 0.01);

  Scene scene;
  scene.frames.emplace_back("global", Frame::identity());
  Frame shift;
  shift.translation = Vec3(0.3, -0.1, 0.2);
  scene.frames.emplace_back("shifted", shift);
  scene.frames.emplace_back("random", testing::random_frame(rng));

  const auto locals = project_to_frames(*geom, demo, scene);
  REQUIRE(locals.size() == 3);

  for (std::size_t i = 0; i < demo.points.size(); ++i) {
    // Identity frame: untouched.
    CHECK((locals[0].points[i].x - demo.points[i].x).norm() == 0.0);
    CHECK((locals[0].points[i].wrench - demo.points[i].wrench).norm() == 0.0);

    // Pure translation: positions shift, orientation and twists unchanged.
    CHECK((locals[1].points[i].x.head<3>() -
           (demo.points[i].x.head<3>() - shift.translation))
              .norm() < 1e-12);
    CHECK((locals[1].points[i].x.tail<4>() - demo.points[i].x.tail<4>())
              .norm() < 1e-12);
    CHECK((locals[1].points[i].twist - demo.points[i].twist).norm() < 1e-12);

    // General frame: applying the frame again recovers the global data.
    const Frame& f = scene.frames[2].second;
    const Vec back = geom->apply(f, locals[2].points[i].x);
    CHECK(geom->log(back, demo.points[i].x).norm() < 1e-12);
    const Vec tw_back = geom->tangent_rotation(f) * locals[2].points[i].twist;
    CHECK((tw_back - demo.points[i].twist).norm() < 1e-12);
  }

  // Rigid action: pairwise tangent distances are preserved.
  for (std::size_t i = 1; i < demo.points.size(); ++i) {
    const double global_d =
        geom->distance(demo.points[i - 1].x, demo.points[i].x);
    const double local_d =
        geom->distance(locals[2].points[i - 1].x, locals[2].points[i].x);
    CHECK(std::abs(global_d - local_d) < 1e-9);
  }
}

TEST_CASE("validator reports jitter, bad twists, spikes, and NaNs") {
  auto geom = Geometry::pose();
  const Demonstration clean = make_demo(40, 0.01);
  CHECK(validate_demo(*geom, clean).empty());

  Demonstration jitter = clean;
  jitter.points[20].time += 0.004;
  bool saw_jitter = false;
  for (const auto& issue : validate_demo(*geom, jitter)) {
    saw_jitter |= issue.message.find("jitter") != std::string::npos;
  }
  CHECK(saw_jitter);

  Demonstration bad_twist = clean;
  bad_twist.points[15].twist(1) += 2.0;
  bool saw_twist = false;
  for (const auto& issue : validate_demo(*geom, bad_twist)) {
    saw_twist |= issue.index == 15 &&
                 issue.message.find("twist") != std::string::npos;
  }
  CHECK(saw_twist);

  Demonstration spike = clean;
  spike.points[10].wrench(2) = 120.0;
  bool saw_spike = false;
  for (const auto& issue : validate_demo(*geom, spike)) {
    saw_spike |= issue.message.find("spike") != std::string::npos;
  }
  CHECK(saw_spike);

  Demonstration nan_demo = clean;
  nan_demo.points[7].wrench(0) = std::nan("");
  bool saw_nan = false;
  for (const auto& issue : validate_demo(*geom, nan_demo)) {
    saw_nan |= issue.index == 7;
  }
  CHECK(saw_nan);
}

TEST_CASE("scene derivation from the first sample") {
  auto geom = Geometry::pose();
  const Demonstration demo = make_demo(10, 0.01);
  const Scene scene =
      scene_from_demo(*geom, demo, {"robot", "global", "object"});
  REQUIRE(scene.frames.size() == 3);
  CHECK(scene.frames[0].first == "robot");
  CHECK((scene.require("robot").translation - demo.points[0].x.head<3>())
            .norm() == 0.0);
  CHECK(scene.require("global").approx_equal(Frame::identity()));
  CHECK((scene.require("object").translation -
         demo.points[0].object_pose.head<3>())
            .norm() == 0.0);
  CHECK_THROWS_AS(scene_from_demo(*geom, demo, {"table"}), Error);

  // Projecting into the robot frame puts the first sample at the origin.
  const auto locals = project_to_frames(*geom, demo, scene);
  CHECK(geom->distance(locals[0].points[0].x, geom->origin()) < 1e-12);
}

TEST_CASE("scene files round trip") {
  Rng rng(223);
  Scene scene;
  scene.frames.emplace_back("object", testing::random_frame(rng));
  scene.frames.emplace_back("robot", testing::random_frame(rng));
  const fs::path p = tmp_dir() / "scene.json";
  save_scene(scene, p);
  const Scene loaded = load_scene(p);
  REQUIRE(loaded.frames.size() == 2);
  CHECK(loaded.require("object").approx_equal(scene.require("object"), 1e-12));
  CHECK(loaded.require("robot").approx_equal(scene.require("robot"), 1e-12));

  const Scene ordered = loaded.subset({"robot", "object"});
  CHECK(ordered.frames[0].first == "robot");
  CHECK_THROWS_AS(loaded.subset({"camera"}), Error);

  const fs::path bad = tmp_dir() / "scene_bad.json";
  std::ofstream(bad) << "{\"frames\": {}}";
  CHECK_THROWS_AS(load_scene(bad), FormatError);
}

}  // TEST_SUITE
