#include "poseloop/filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "poseloop/rng.hpp"

namespace poseloop {

double ParticleSet::weight_sum() const {
    double s = 0;
    for (const auto& p : particles) s += p.weight;
    return s;
}

void ParticleSet::normalize_weights() {
    double s = weight_sum();
    if (s <= 0) throw std::runtime_error("cannot normalize all-zero particle weights");
    for (auto& p : particles) p.weight /= s;
}

double effective_sample_size(const ParticleSet& ps) {
    double sq = 0;
    for (const auto& p : ps.particles) sq += p.weight * p.weight;
    return sq > 0 ? 1.0 / sq : 0.0;
}

namespace {

// Nearest valid-depth pixel within `radius` of (u, v); returns depth or 0.
double nearby_depth(const DepthImage& depth, int u, int v, int radius) {
    u = std::clamp(u, 0, depth.width - 1);
    v = std::clamp(v, 0, depth.height - 1);
    if (depth.at(u, v) > 0) return depth.at(u, v);
    double best = 0, best_d2 = 1e18;
    for (int dv = -radius; dv <= radius; ++dv)
        for (int du = -radius; du <= radius; ++du) {
            int uu = u + du, vv = v + dv;
            if (!depth.contains(uu, vv) || depth.at(uu, vv) <= 0) continue;
            double d2 = double(du) * du + double(dv) * dv;
            if (d2 < best_d2 && d2 <= double(radius) * radius) {
                best_d2 = d2;
                best = depth.at(uu, vv);
            }
        }
    return best;
}

void clamp_to_frustum(Particle& p, const CameraIntrinsics& K, bool& clamped) {
    double u = std::clamp(p.u, 0.0, double(K.width - 1));
    double v = std::clamp(p.v, 0.0, double(K.height - 1));
    double z = std::clamp(p.z, 0.05, 20.0);
    clamped = (u != p.u) || (v != p.v) || (z != p.z);
    p.u = u;
    p.v = v;
    p.z = z;
}

}  // namespace

ParticleSet init_particles(double u_hat, double v_hat, const DepthImage& depth, GridDims dims,
                           const FilterConfig& cfg, std::uint64_t seed, int object_id) {
    double center_z = nearby_depth(depth, int(std::lround(u_hat)), int(std::lround(v_hat)), 10);
    if (center_z <= 0) throw std::runtime_error("depth hole at detection center");

    Rng rng(seed);
    ParticleSet ps;
    ps.object_id = object_id;
    ps.particles.resize(cfg.n_particles);
    RotationGrid flat = RotationGrid::uniform(dims);
    for (auto& p : ps.particles) {
        p.u = u_hat + cfg.sigma_u * rng.normal();
        p.v = v_hat + cfg.sigma_v * rng.normal();
        double z0 = nearby_depth(depth, int(std::lround(p.u)), int(std::lround(p.v)), 10);
        if (z0 <= 0) z0 = center_z;
        p.z = z0 + cfg.sigma_z * (2.0 * rng.uniform() - 1.0);
        p.z = std::max(p.z, 0.05);
        p.u = std::clamp(p.u, 0.0, double(depth.width - 1));
        p.v = std::clamp(p.v, 0.0, double(depth.height - 1));
        p.rotation = flat;
        p.weight = 1.0 / cfg.n_particles;
    }
    return ps;
}

ParticleSet global_init(const DepthImage& depth, GridDims dims, const FilterConfig& cfg,
                        std::uint64_t seed, int object_id) {
    std::vector<int> valid;
    valid.reserve(std::size_t(depth.width) * depth.height);
    for (int v = 0; v < depth.height; ++v)
        for (int u = 0; u < depth.width; ++u)
            if (depth.at(u, v) > 0) valid.push_back(v * depth.width + u);
    if (valid.empty()) throw std::runtime_error("no valid depth anywhere in the image");

    Rng rng(seed);
    ParticleSet ps;
    ps.object_id = object_id;
    ps.particles.resize(cfg.n_particles);
    RotationGrid flat = RotationGrid::uniform(dims);
    for (auto& p : ps.particles) {
        int px = valid[rng.uniform_index(valid.size())];
        p.u = px % depth.width;
        p.v = px / depth.width;
        p.z = std::max(0.05, depth.at(int(p.u), int(p.v)) +
                                 cfg.sigma_z * (2.0 * rng.uniform() - 1.0));
        p.rotation = flat;
        p.weight = 1.0 / cfg.n_particles;
    }
    return ps;
}

UpdateResult update(const ParticleSet& ps, const RgbImage& rgb, const DepthImage& depth,
                    const CameraIntrinsics& K, const Codebook& book, const FilterConfig& cfg) {
    const int n = ps.size();
    if (n == 0) throw std::invalid_argument("empty particle set");
    const int cells = book.dims.cells();

    Eigen::MatrixXf queries(n, kCodeLength);
    std::vector<bool> code_valid(n);
    for (int i = 0; i < n; ++i) {
        const Particle& p = ps.particles[i];
        Roi roi = crop_roi(rgb, p.u, p.v, p.z, book.diameter, K);
        Code c = encode(roi.image);
        code_valid[i] = c.valid();
        queries.row(i) = c.descriptor.transpose();
    }

    // one GEMM for all particle-vs-template cosines
    Eigen::MatrixXf sims = queries * book.codes.transpose();

    UpdateResult out;
    out.particles = ps;
    for (int i = 0; i < n; ++i) {
        Particle& p = out.particles.particles[i];
        if (!code_valid[i]) {
            p.weight = 0.0;  // background crop: no appearance support
            continue;
        }
        double best = 0.0, evidence = 0.0;
        Eigen::VectorXd lik(cells);
        for (int c = 0; c < cells; ++c) {
            double l = std::exp(cfg.beta * std::max(0.0, double(sims(i, c))));
            lik[c] = l;
            best = std::max(best, l);
            evidence += p.rotation.weight(c) * l;
        }
        p.rotation.weights() = p.rotation.weights().cwiseProduct(lik);
        if (p.rotation.sum() <= 0)
            p.rotation = RotationGrid::uniform(book.dims);
        else
            p.rotation.normalize();

        double w = cfg.weight_by_sum ? evidence : best;
        int du = int(std::lround(p.u)), dv = int(std::lround(p.v));
        if (depth.contains(du, dv) && depth.at(du, dv) > 0) {
            // p.z is the distance to the object *center*; the sensor sees the
            // surface, so shift by the expected center-to-surface gap for the
            // particle's most likely orientation before comparing.
            double offset = 0.0;
            if (book.center_offsets.size() == cells)
                offset = book.center_offsets[p.rotation.argmax()];
            double dz = (p.z - offset) - depth.at(du, dv);
            w *= std::exp(-dz * dz / (2.0 * cfg.sigma_d * cfg.sigma_d));
        }
        p.weight = p.weight * w;
    }

    double total = out.particles.weight_sum();
    if (total <= 0 || !std::isfinite(total)) {
        out.reinit_needed = true;
        for (auto& p : out.particles.particles) p.weight = 1.0 / n;
        out.ess = n;
        return out;
    }
    out.particles.normalize_weights();
    out.ess = effective_sample_size(out.particles);

    if (out.ess < n / 2.0) {
        // systematic resampling with a fixed offset keeps runs reproducible
        std::vector<Particle> next;
        next.reserve(n);
        double step = 1.0 / n, pos = 0.5 * step, cum = 0.0;
        int j = -1;
        for (int i = 0; i < n; ++i) {
            while (cum < pos && j + 1 < n) cum += out.particles.particles[++j].weight;
            next.push_back(out.particles.particles[std::max(j, 0)]);
            next.back().weight = step;
            pos += step;
        }
        out.particles.particles = std::move(next);
        out.resampled = true;
    }
    return out;
}

ParticleSet propagate(const ParticleSet& ps, const MotionDelta& delta,
                      const CameraIntrinsics& K, const FilterConfig& cfg, std::uint64_t seed,
                      double noise_scale, int* clamped) {
    Rng rng(seed);
    ParticleSet out = ps;
    int n_clamped = 0;
    double st = cfg.sigma_t * noise_scale;
    double sr = cfg.sigma_r * noise_scale;
    for (auto& p : out.particles) {
        Vec3 x = pixel_to_point(p.u, p.v, p.z, K);
        Vec3 noise(rng.normal(), rng.normal(), rng.normal());
        x = transform_point(delta, x) + st * noise;
        point_to_pixel(x, K, p.u, p.v, p.z);
        bool c;
        clamp_to_frustum(p, K, c);
        if (c) ++n_clamped;
        p.rotation = shift_rotation_grid(p.rotation, delta);
        if (sr > 0) p.rotation = blur_rotation_grid(p.rotation, sr);
    }
    if (clamped) *clamped = n_clamped;
    return out;
}

Pose estimate(const ParticleSet& ps, const CameraIntrinsics& K) {
    if (ps.size() == 0) throw std::invalid_argument("empty particle set");
    double total = ps.weight_sum();
    if (total <= 0) throw std::runtime_error("degenerate particle set: all weights zero");

    Vec3 t = Vec3::Zero();
    RotationGrid mixed(ps.particles[0].rotation.dims());
    mixed.weights().setZero();
    for (const auto& p : ps.particles) {
        double w = p.weight / total;
        t += w * pixel_to_point(p.u, p.v, p.z, K);
        mixed.weights() += w * p.rotation.weights();
    }
    return Pose::from(grid_expectation(mixed), t);
}

}  // namespace poseloop
