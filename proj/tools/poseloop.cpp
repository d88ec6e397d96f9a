// Command-line front end: everything the annotation loop does, one
// subcommand per stage, plus asset builders for offline use.
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "poseloop/pipeline.hpp"

using namespace poseloop;
using nlohmann::json;

namespace {

RunConfig config_or_default(const std::string& path) {
    if (path.empty()) return RunConfig{};
    return load_run_config(path);
}

json outcome_json(const FrameOutcome& oc) {
    return json{{"object", oc.object_id}, {"accepted", oc.accepted},
                {"s", oc.s},              {"e", oc.e},
                {"add", oc.add},          {"attempted_init", oc.attempted_init}};
}

void emit(const json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::ofstream f(out_path);
        if (!f) throw std::runtime_error("cannot write " + out_path);
        f << j.dump(2) << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-supervised 6-DoF pose annotation on a simulated tabletop"};
    app.require_subcommand(1);

    std::string config_path, cache_dir, out_path, dataset_dir, model_name;
    std::uint64_t seed = 1;

    auto* config_cmd = app.add_subcommand("config", "print the default config schema");
    config_cmd->add_option("--out", out_path, "write to a file instead of stdout");

    auto* sdf_cmd = app.add_subcommand("build-sdf", "voxelize a model into a signed field");
    sdf_cmd->add_option("--model", model_name, "model name from the library")->required();
    std::string sdf_out;
    double voxel = 0.0;
    sdf_cmd->add_option("--out", sdf_out, "output .sdf path")->required();
    sdf_cmd->add_option("--voxel", voxel, "voxel edge in meters (default diameter/64)");

    auto* book_cmd = app.add_subcommand("build-codebook", "render rotation templates");
    book_cmd->add_option("--model", model_name, "model name from the library")->required();
    std::string book_out;
    book_cmd->add_option("--out", book_out, "output .cbk path")->required();
    book_cmd->add_option("--config", config_path, "run config file");

    auto* init_cmd = app.add_subcommand("init", "initialize object poses in a fresh scene");
    init_cmd->add_option("--config", config_path, "run config file");
    init_cmd->add_option("--seed", seed, "scene and filter seed");
    init_cmd->add_option("--cache", cache_dir, "asset cache directory");
    init_cmd->add_option("--out", out_path, "write the outcome JSON here");

    auto* track_cmd = app.add_subcommand("track", "track one camera sweep over a fresh scene");
    track_cmd->add_option("--config", config_path, "run config file");
    track_cmd->add_option("--seed", seed, "scene and filter seed");
    track_cmd->add_option("--cache", cache_dir, "asset cache directory");
    track_cmd->add_option("--out", out_path, "write the outcome JSON here");
    bool no_motion_prior = false;
    track_cmd->add_flag("--no-motion-prior", no_motion_prior,
                        "propagate with the identity delta instead of reported motion");

    auto* collect_cmd = app.add_subcommand("collect", "run the full annotation loop");
    collect_cmd->add_option("--config", config_path, "run config file");
    collect_cmd->add_option("--seed", seed, "master seed");
    collect_cmd->add_option("--cache", cache_dir, "asset cache directory");
    int n_scenes = 2, interactions = 2;
    collect_cmd->add_option("--scenes", n_scenes, "number of scenes");
    collect_cmd->add_option("--interactions", interactions, "interactions per scene");
    std::string collect_out;
    collect_cmd->add_option("--out", collect_out, "dataset output directory")->required();

    auto* adapt_cmd = app.add_subcommand("adapt", "fold a dataset back into the codebooks");
    adapt_cmd->add_option("--config", config_path, "run config file");
    adapt_cmd->add_option("--dataset", dataset_dir, "collected dataset directory")->required();
    adapt_cmd->add_option("--seed", seed, "holdout scene seed");
    adapt_cmd->add_option("--cache", cache_dir, "asset cache directory");
    adapt_cmd->add_option("--out", out_path, "write the comparison JSON here");
    double alpha = 0.3;
    int holdout = 10;
    adapt_cmd->add_option("--alpha", alpha, "template mix-in ratio in [0,1]");
    adapt_cmd->add_option("--holdout", holdout, "fresh single-object scenes per side");

    auto* report_cmd = app.add_subcommand("report", "score a dataset against its key");
    report_cmd->add_option("--dataset", dataset_dir, "collected dataset directory")
        ->required();
    std::string report_out;
    report_cmd->add_option("--out", report_out, "report output directory")->required();

    // Exit codes: 0 success, 1 config error, 2 run failure.
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (*config_cmd) {
        if (out_path.empty()) {
            std::cout << default_config_text();
        } else {
            std::ofstream f(out_path);
            if (!f) {
                std::fprintf(stderr, "error: cannot write %s\n", out_path.c_str());
                return 2;
            }
            f << default_config_text();
        }
        return 0;
    }

    RunConfig cfg;
    try {
        cfg = config_or_default(config_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    }

    try {
        if (*sdf_cmd) {
            ModelLibrary lib = standard_models();
            auto it = std::find_if(lib.begin(), lib.end(),
                                   [&](const ObjectModel& m) { return m.name == model_name; });
            if (it == lib.end()) throw std::runtime_error("unknown model: " + model_name);
            double edge = voxel > 0 ? voxel : it->diameter / 64.0;
            SdfGrid grid = build_sdf(it->mesh, edge);
            save_sdf(grid, sdf_out);
            std::printf("%s: %dx%dx%d voxels at %.4g m -> %s\n", it->name.c_str(),
                        grid.dims[0], grid.dims[1], grid.dims[2], grid.voxel_size,
                        sdf_out.c_str());
            return 0;
        }

        if (*book_cmd) {
            ModelLibrary lib = standard_models();
            auto it = std::find_if(lib.begin(), lib.end(),
                                   [&](const ObjectModel& m) { return m.name == model_name; });
            if (it == lib.end()) throw std::runtime_error("unknown model: " + model_name);
            int id = int(it - lib.begin()) + 1;
            Codebook book = build_codebook(it->mesh, cfg.intrinsics(), cfg.grid, cfg.z0, id);
            save_codebook(book, book_out);
            std::printf("%s: %d templates (%dx%dx%d) at z0=%.3g m -> %s\n", it->name.c_str(),
                        book.cell_count(), book.dims.n_pitch, book.dims.n_yaw,
                        book.dims.n_roll, book.z0, book_out.c_str());
            return 0;
        }

        if (*init_cmd || *track_cmd) {
            PipelineContext ctx = PipelineContext::make(cfg, cache_dir);
            std::vector<int> models = ctx.stage_models(0);
            Scene scene = generate_scene(ctx.lib, models, cfg.workspace_lo, cfg.workspace_hi,
                                         Rng::derive(seed, 0x5ce, 0));
            Trajectory traj =
                make_trajectory(scene, cfg.n_waypoints, cfg.camera_distance,
                                cfg.camera_elevation, Rng::derive(seed, 0x7a7, 0));
            std::vector<ObjectTrack> tracks;

            if (*init_cmd) {
                Observation obs =
                    observe(scene, ctx.lib, traj.waypoints[0], traj.waypoints[0], ctx.K,
                            cfg.noise, Rng::derive(seed, 0x0b5, 0));
                MaskImage seg =
                    oracle_segment(obs, cfg.segmenter, Rng::derive(seed, 0x5e6, 0));
                auto outcomes = initialize_scene(ctx, scene, obs, seg, tracks, seed);
                json objs = json::array();
                int accepted = 0;
                for (const auto& oc : outcomes) {
                    objs.push_back(outcome_json(oc));
                    accepted += oc.accepted;
                }
                emit(json{{"objects", objs}, {"accepted", accepted}}, out_path);
                return accepted > 0 ? 0 : 2;
            }

            TrackResult res = track_scene(ctx, scene, traj, tracks, 0, seed, std::nullopt,
                                          nullptr, no_motion_prior);
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
            emit(json{{"frames", frames},
                      {"accepted", accepted},
                      {"outcomes", total},
                      {"aborted", res.aborted}},
                 out_path);
            return res.aborted ? 2 : 0;
        }

        if (*collect_cmd) {
            PipelineContext ctx = PipelineContext::make(cfg, cache_dir);
            CollectStats st = collect(ctx, n_scenes, interactions, collect_out, seed);
            std::printf("%d scenes, %d sequences, %d frames, %d accepted records -> %s\n",
                        st.scenes, st.sequences, st.frames, st.records,
                        st.output_dir.c_str());
            return st.records > 0 ? 0 : 2;
        }

        if (*adapt_cmd) {
            PipelineContext ctx = PipelineContext::make(cfg, cache_dir);
            AdaptReport rep = adapt_and_compare(ctx, dataset_dir, alpha, holdout, seed);
            if (out_path.empty()) {
                std::cout << rep.to_json() << "\n";
            } else {
                std::ofstream f(out_path);
                if (!f) throw std::runtime_error("cannot write " + out_path);
                f << rep.to_json() << "\n";
            }
            return 0;
        }

        if (*report_cmd) {
            write_report(dataset_dir, report_out);
            std::printf("report written to %s\n", report_out.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 2;  // unreachable subcommand dispatch
}
