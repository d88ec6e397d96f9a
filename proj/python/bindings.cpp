// Python face of the library: config text in, dict-shaped results out, plus
// the raw numeric probes the smoke tests lean on.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "poseloop/pipeline.hpp"
#include "poseloop/simulator.hpp"

namespace py = pybind11;
using namespace poseloop;
using nlohmann::json;

namespace {

using Pose7 = Eigen::Matrix<double, 7, 1>;  // qw qx qy qz tx ty tz

Pose pose_from7(const Pose7& v) {
    Quat q(v[0], v[1], v[2], v[3]);
    if (q.norm() < 1e-12) throw std::invalid_argument("pose quaternion is zero");
    return Pose::from(q, Vec3(v[4], v[5], v[6]));
}

std::vector<Vec3> rows_to_points(const Eigen::MatrixXd& m) {
    if (m.cols() != 3) throw std::invalid_argument("points must be N x 3");
    std::vector<Vec3> out(std::size_t(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) out[std::size_t(i)] = m.row(i).transpose();
    return out;
}

// Round-trip through the stdlib json parser rather than hand-building nested
// dicts; results are small.
py::object json_to_py(const json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

json outcome_json(const FrameOutcome& oc) {
    return json{{"object", oc.object_id}, {"accepted", oc.accepted},
                {"s", oc.s},              {"e", oc.e},
                {"add", oc.add},          {"attempted_init", oc.attempted_init}};
}

const ObjectModel& model_or_throw(const ModelLibrary& lib, const std::string& name) {
    auto it = std::find_if(lib.begin(), lib.end(),
                           [&](const ObjectModel& m) { return m.name == name; });
    if (it == lib.end()) throw std::invalid_argument("unknown model: " + name);
    return *it;
}

/// Owns the per-run assets and mirrors the CLI subcommands one method each.
class Runner {
  public:
    Runner(const std::string& config_text, const std::string& cache_dir)
        : ctx_(PipelineContext::make(
              config_text.empty() ? RunConfig{} : parse_run_config(config_text), cache_dir)) {}

    py::object initialize(std::uint64_t seed) const {
        Scene scene;
        Trajectory traj;
        fresh_scene(seed, scene, traj);
        Observation obs = observe(scene, ctx_.lib, traj.waypoints[0], traj.waypoints[0],
                                  ctx_.K, ctx_.cfg.noise, Rng::derive(seed, 0x0b5, 0));
        MaskImage seg = oracle_segment(obs, ctx_.cfg.segmenter, Rng::derive(seed, 0x5e6, 0));
        std::vector<ObjectTrack> tracks;
        auto outcomes = initialize_scene(ctx_, scene, obs, seg, tracks, seed);
        json objs = json::array();
        int accepted = 0;
        for (const auto& oc : outcomes) {
            objs.push_back(outcome_json(oc));
            accepted += oc.accepted;
        }
        return json_to_py(json{{"objects", objs}, {"accepted", accepted}});
    }

    py::object track(std::uint64_t seed, bool use_motion_prior) const {
        Scene scene;
        Trajectory traj;
        fresh_scene(seed, scene, traj);
        std::vector<ObjectTrack> tracks;
        TrackResult res = track_scene(ctx_, scene, traj, tracks, 0, seed, std::nullopt,
                                      nullptr, !use_motion_prior);
        json frames = json::array();
        int accepted = 0, total = 0;
        for (const auto& fr : res.frames) {
            json objs = json::array();
            for (const auto& oc : fr.outcomes) {
                objs.push_back(outcome_json(oc));
                accepted += oc.accepted;
                ++total;
            }
            frames.push_back(json{{"frame", fr.frame}, {"objects", objs}});
        }
        return json_to_py(json{{"frames", frames},
                               {"accepted", accepted},
                               {"outcomes", total},
                               {"aborted", res.aborted}});
    }

    py::object collect_run(int scenes, int interactions, const std::string& out_dir,
                           std::uint64_t seed) const {
        CollectStats st = collect(ctx_, scenes, interactions, out_dir, seed);
        return json_to_py(json{{"scenes", st.scenes},
                               {"sequences", st.sequences},
                               {"frames", st.frames},
                               {"records", st.records},
                               {"output_dir", st.output_dir}});
    }

    py::object adapt(const std::string& dataset_dir, double alpha, int holdout,
                     std::uint64_t seed) const {
        AdaptReport rep = adapt_and_compare(ctx_, dataset_dir, alpha, holdout, seed);
        return json_to_py(json::parse(rep.to_json()));
    }

    std::vector<std::string> models() const {
        std::vector<std::string> names;
        for (const auto& m : ctx_.lib) names.push_back(m.name);
        return names;
    }

  private:
    void fresh_scene(std::uint64_t seed, Scene& scene, Trajectory& traj) const {
        scene = generate_scene(ctx_.lib, ctx_.stage_models(0), ctx_.cfg.workspace_lo,
                               ctx_.cfg.workspace_hi, Rng::derive(seed, 0x5ce, 0));
        traj = make_trajectory(scene, ctx_.cfg.n_waypoints, ctx_.cfg.camera_distance,
                               ctx_.cfg.camera_elevation, Rng::derive(seed, 0x7a7, 0));
    }

    PipelineContext ctx_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Self-supervised 6-DoF object pose annotation on a simulated tabletop";
    m.attr("__version__") = "0.1.0";

    m.def("default_config", &default_config_text,
          "The key = value schema with default values, as accepted by Runner.");

    m.def(
        "config_info",
        [](const std::string& text) {
            RunConfig cfg = parse_run_config(text);
            json models = json::array();
            for (const auto& name : cfg.scene_models) models.push_back(name);
            return json_to_py(
                json{{"models", models},
                     {"stage", cfg.stage == Stage::kSingleObject ? "single_object" : "clutter"},
                     {"width", cfg.image_width},
                     {"height", cfg.image_height},
                     {"waypoints", cfg.n_waypoints}});
        },
        py::arg("text"), "Parse config text and echo the headline fields; raises on bad keys.");

    m.def(
        "model_names",
        [] {
            std::vector<std::string> names;
            for (const auto& mo : standard_models()) names.push_back(mo.name);
            return names;
        },
        "Names in the built-in object library.");

    m.def(
        "probe_sdf",
        [](const std::string& model, const Eigen::MatrixXd& points, double voxel) {
            ModelLibrary lib = standard_models();
            const ObjectModel& mo = model_or_throw(lib, model);
            double edge = voxel > 0 ? voxel : mo.diameter / 64.0;
            SdfGrid grid = build_sdf(mo.mesh, edge);
            Eigen::VectorXd values(points.rows());
            Eigen::MatrixXd gradients(points.rows(), 3);
            for (Eigen::Index i = 0; i < points.rows(); ++i) {
                SdfSample s = sample_sdf(grid, points.row(i).transpose());
                values[i] = s.value;
                gradients.row(i) = s.gradient.transpose();
            }
            return py::make_tuple(values, gradients);
        },
        py::arg("model"), py::arg("points"), py::arg("voxel") = 0.0,
        "Voxelize a library model and sample (value, gradient) at N x 3 points.");

    m.def(
        "add_metric",
        [](const Eigen::MatrixXd& points, const Pose7& a, const Pose7& b) {
            return add_metric(rows_to_points(points), pose_from7(a), pose_from7(b));
        },
        py::arg("points"), py::arg("pose_a"), py::arg("pose_b"),
        "Mean distance between correspondingly transformed points; poses are "
        "[qw, qx, qy, qz, tx, ty, tz].");

    m.def(
        "adds_metric",
        [](const Eigen::MatrixXd& points, const Pose7& a, const Pose7& b) {
            return adds_metric(rows_to_points(points), pose_from7(a), pose_from7(b));
        },
        py::arg("points"), py::arg("pose_a"), py::arg("pose_b"),
        "Symmetric variant: mean nearest-neighbor distance between the two clouds.");

    m.def("write_report", &write_report, py::arg("dataset_dir"), py::arg("out_dir"),
          "Score a collected dataset: records.csv plus summary.json.");

    py::class_<Runner>(m, "Runner",
                       "Per-run assets (models, signed fields, codebooks) plus the loop "
                       "stages as methods. Building with an empty config uses defaults; "
                       "cache_dir persists assets across runs.")
        .def(py::init<const std::string&, const std::string&>(), py::arg("config_text") = "",
             py::arg("cache_dir") = "")
        .def("initialize", &Runner::initialize, py::arg("seed") = 1,
             "Generate a scene and estimate every object's pose from the first view.")
        .def("track", &Runner::track, py::arg("seed") = 1, py::arg("use_motion_prior") = true,
             "Sweep the trajectory over a fresh scene, tracking and gating per frame.")
        .def("collect", &Runner::collect_run, py::arg("scenes"), py::arg("interactions"),
             py::arg("out_dir"), py::arg("seed") = 1,
             "Run the full annotation loop and persist accepted frames as a dataset.")
        .def("adapt", &Runner::adapt, py::arg("dataset_dir"), py::arg("alpha") = 0.3,
             py::arg("holdout") = 10, py::arg("seed") = 1,
             "Fold a dataset into the codebooks and compare init success on held-out scenes.")
        .def_property_readonly("models", &Runner::models);
}
