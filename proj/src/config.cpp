#include "poseloop/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace poseloop {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

struct Schema {
    std::map<std::string, std::function<void(RunConfig&, const std::string&)>> setters;

    void num(const std::string& key, double RunConfig::* field) {
        setters[key] = [field](RunConfig& c, const std::string& v) { c.*field = std::stod(v); };
    }
    template <typename Sub, typename T>
    void nested(const std::string& key, Sub RunConfig::* sub, T Sub::* field) {
        setters[key] = [sub, field](RunConfig& c, const std::string& v) {
            if constexpr (std::is_same_v<T, int>)
                (c.*sub).*field = std::stoi(v);
            else if constexpr (std::is_same_v<T, bool>)
                (c.*sub).*field = (v == "true" || v == "1");
            else
                (c.*sub).*field = std::stod(v);
        };
    }
};

const Schema& schema() {
    static const Schema s = [] {
        Schema s;
        s.nested("filter.particles", &RunConfig::filter, &FilterConfig::n_particles);
        s.nested("filter.sigma_u", &RunConfig::filter, &FilterConfig::sigma_u);
        s.nested("filter.sigma_v", &RunConfig::filter, &FilterConfig::sigma_v);
        s.nested("filter.sigma_z", &RunConfig::filter, &FilterConfig::sigma_z);
        s.nested("filter.k_steps", &RunConfig::filter, &FilterConfig::k_steps);
        s.nested("filter.sigma_t", &RunConfig::filter, &FilterConfig::sigma_t);
        s.nested("filter.sigma_r", &RunConfig::filter, &FilterConfig::sigma_r);
        s.nested("filter.beta", &RunConfig::filter, &FilterConfig::beta);
        s.nested("filter.sigma_d", &RunConfig::filter, &FilterConfig::sigma_d);
        s.nested("filter.weight_by_sum", &RunConfig::filter, &FilterConfig::weight_by_sum);
        s.nested("refine.margin", &RunConfig::refine, &RefineConfig::margin);
        s.nested("refine.lambda", &RunConfig::refine, &RefineConfig::lambda);
        s.nested("refine.max_iters", &RunConfig::refine, &RefineConfig::max_iters);
        s.nested("refine.step_tol", &RunConfig::refine, &RefineConfig::step_tol);
        s.nested("gate.s_star", &RunConfig::gate, &GateConfig::s_star);
        s.nested("gate.e_star", &RunConfig::gate, &GateConfig::e_star);
        s.nested("noise.fk_rot_sigma", &RunConfig::noise, &NoiseModel::fk_rot_sigma);
        s.nested("noise.fk_trans_sigma", &RunConfig::noise, &NoiseModel::fk_trans_sigma);
        s.nested("noise.depth_sigma", &RunConfig::noise, &NoiseModel::depth_sigma);
        s.nested("noise.depth_dropout", &RunConfig::noise, &NoiseModel::depth_dropout);
        s.nested("noise.rgb_offset", &RunConfig::noise, &NoiseModel::rgb_offset);
        s.nested("noise.rgb_sigma", &RunConfig::noise, &NoiseModel::rgb_sigma);
        s.setters["noise.rgb_gain"] = [](RunConfig& c, const std::string& v) {
            std::istringstream in(v);
            char comma;
            if (!(in >> c.noise.rgb_gain[0] >> comma >> c.noise.rgb_gain[1] >> comma >>
                  c.noise.rgb_gain[2]))
                throw std::invalid_argument("expected r,g,b");
        };
        s.setters["noise.calib_bias"] = [](RunConfig& c, const std::string& v) {
            // tx,ty,tz,wx,wy,wz (translation meters, rotation vector radians)
            std::istringstream in(v);
            double t[3], w[3];
            char comma;
            if (!(in >> t[0] >> comma >> t[1] >> comma >> t[2] >> comma >> w[0] >> comma >>
                  w[1] >> comma >> w[2]))
                throw std::invalid_argument("expected tx,ty,tz,wx,wy,wz");
            Vec3 axis(w[0], w[1], w[2]);
            double angle = axis.norm();
            Quat q = angle > 1e-15 ? Quat(Eigen::AngleAxisd(angle, axis / angle))
                                   : Quat::Identity();
            c.noise.calib_bias = Pose::from(q, Vec3(t[0], t[1], t[2]));
        };
        s.nested("segmenter.erode_px", &RunConfig::segmenter, &SegErrorModel::erode_px);
        s.nested("segmenter.dilate_px", &RunConfig::segmenter, &SegErrorModel::dilate_px);
        s.nested("segmenter.flip_rate", &RunConfig::segmenter, &SegErrorModel::flip_rate);
        s.nested("segmenter.miss_rate", &RunConfig::segmenter, &SegErrorModel::miss_rate);
        s.nested("grid.pitch", &RunConfig::grid, &GridDims::n_pitch);
        s.nested("grid.yaw", &RunConfig::grid, &GridDims::n_yaw);
        s.nested("grid.roll", &RunConfig::grid, &GridDims::n_roll);
        s.setters["stage"] = [](RunConfig& c, const std::string& v) {
            if (v == "single_object")
                c.stage = Stage::kSingleObject;
            else if (v == "clutter")
                c.stage = Stage::kClutter;
            else
                throw std::invalid_argument("stage must be single_object or clutter");
        };
        s.setters["scene.models"] = [](RunConfig& c, const std::string& v) {
            c.scene_models.clear();
            std::istringstream in(v);
            std::string name;
            while (std::getline(in, name, ',')) {
                name = trim(name);
                if (!name.empty()) c.scene_models.push_back(name);
            }
        };
        s.setters["scene.workspace"] = [](RunConfig& c, const std::string& v) {
            std::istringstream in(v);
            double x, y, z;
            char comma;
            if (!(in >> x >> comma >> y >> comma >> z))
                throw std::invalid_argument("expected half_x,half_y,height");
            c.workspace_lo = Vec3(-x, -y, 0);
            c.workspace_hi = Vec3(x, y, z);
        };
        s.num("camera.distance", &RunConfig::camera_distance);
        s.num("camera.elevation", &RunConfig::camera_elevation);
        s.num("camera.z0", &RunConfig::z0);
        s.setters["camera.width"] = [](RunConfig& c, const std::string& v) {
            c.image_width = std::stoi(v);
        };
        s.setters["camera.height"] = [](RunConfig& c, const std::string& v) {
            c.image_height = std::stoi(v);
        };
        s.setters["trajectory.waypoints"] = [](RunConfig& c, const std::string& v) {
            c.n_waypoints = std::stoi(v);
        };
        s.setters["budget.init_attempts"] = [](RunConfig& c, const std::string& v) {
            c.max_init_attempts = std::stoi(v);
        };
        s.num("interaction.p_grasp", &RunConfig::p_grasp);
        return s;
    }();
    return s;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    RunConfig cfg;
    cfg.scene_models = {"box", "cylinder", "sphere", "l_bracket", "mug"};
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        auto it = schema().setters.find(key);
        if (it == schema().setters.end())
            throw std::runtime_error("config line " + std::to_string(lineno) +
                                     ": unknown key '" + key + "'");
        try {
            it->second(cfg, value);
        } catch (const std::exception& e) {
            throw std::runtime_error("config line " + std::to_string(lineno) + ": bad value '" +
                                     value + "' for " + key + " (" + e.what() + ")");
        }
    }

    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::runtime_error(std::string("config: ") + what);
    };
    require(cfg.filter.n_particles > 0, "filter.particles must be positive");
    require(cfg.filter.k_steps > 0, "filter.k_steps must be positive");
    require(cfg.refine.max_iters > 0, "refine.max_iters must be positive");
    require(cfg.grid.n_pitch > 0 && cfg.grid.n_yaw > 0 && cfg.grid.n_roll > 0,
            "grid dimensions must be positive");
    require(cfg.image_width > 0 && cfg.image_height > 0, "camera resolution must be positive");
    require(cfg.n_waypoints > 0, "trajectory.waypoints must be positive");
    require(cfg.camera_distance > 0 && cfg.z0 > 0, "camera distances must be positive");
    require(cfg.max_init_attempts > 0, "budget.init_attempts must be positive");
    require(cfg.p_grasp >= 0 && cfg.p_grasp <= 1, "interaction.p_grasp must be in [0, 1]");
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read config file " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_run_config(buf.str());
}

std::string default_config_text() {
    return R"(# Run configuration. Values below are the defaults.

# Particle filter
filter.particles = 100
filter.sigma_u = 20        # pixels, init scatter
filter.sigma_v = 20        # pixels
filter.sigma_z = 0.1       # meters, half-range of uniform depth sampling
filter.k_steps = 50        # filtering steps during initialization
filter.sigma_t = 0.015     # meters, translation process noise
filter.sigma_r = 0.05      # radians, rotation diffusion
filter.beta = 40           # appearance likelihood sharpness
filter.sigma_d = 0.02      # meters, depth likelihood width
filter.weight_by_sum = false

# SDF refinement
refine.margin = 0.02       # meters, visibility mask band
refine.lambda = 0.001      # translation regularizer
refine.max_iters = 60
refine.step_tol = 1e-5

# Save gate
gate.s_star = 0.5
gate.e_star = 0.03         # meters

# Sensor / kinematics corruption (zero everything for clean-room runs)
noise.fk_rot_sigma = 0.01        # radians per step
noise.fk_trans_sigma = 0.003     # meters per step
noise.calib_bias = 0,0,0,0,0,0   # tx,ty,tz,wx,wy,wz
noise.depth_sigma = 0.003
noise.depth_dropout = 0.02
noise.rgb_offset = 0.03
noise.rgb_sigma = 0.02
noise.rgb_gain = 0.92,1,1.08     # per-channel multiplicative domain shift

# Segmenter error model
segmenter.erode_px = 1
segmenter.dilate_px = 1
segmenter.flip_rate = 0.002
segmenter.miss_rate = 0.02

# Rotation grid
grid.pitch = 16
grid.yaw = 8
grid.roll = 16

# Scenes
stage = clutter            # single_object | clutter
scene.models = box,cylinder,sphere,l_bracket,mug
scene.workspace = 0.25,0.25,0.4   # half_x,half_y,height

# Camera
camera.width = 160
camera.height = 120
camera.distance = 0.5      # meters from clutter
camera.elevation = 55      # degrees at the initialization view
camera.z0 = 0.5            # codebook canonical distance
trajectory.waypoints = 20

# Budgets and interaction
budget.init_attempts = 15
interaction.p_grasp = 0.8
)";
}

}  // namespace poseloop
