#include "mmcut/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mmcut/distance_transform.hpp"
#include "mmcut/errors.hpp"

namespace mmcut {

namespace {

struct Moments {
    Vec2 centroid;
    double scale;  // radius of gyration
    double theta;  // principal-axis orientation
};

Moments mask_moments(const BinaryMask& mask) {
    long count = 0;
    double sx = 0.0, sy = 0.0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.at(x, y)) {
                sx += x;
                sy += y;
                ++count;
            }
    if (count == 0) throw EmptyShape("mask_moments: no foreground pixels");
    if (count < 3)
        throw DegenerateShape("mask_moments: only " + std::to_string(count) +
                              " foreground pixels, orientation undefined");
    const double cx = sx / count, cy = sy / count;
    double mu20 = 0.0, mu02 = 0.0, mu11 = 0.0;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.at(x, y)) {
                const double dx = x - cx, dy = y - cy;
                mu20 += dx * dx;
                mu02 += dy * dy;
                mu11 += dx * dy;
            }
    mu20 /= count;
    mu02 /= count;
    mu11 /= count;
    Moments m;
    m.centroid = {cx, cy};
    m.scale = std::sqrt(mu20 + mu02);
    m.theta = 0.5 * std::atan2(2.0 * mu11, mu20 - mu02);
    return m;
}

RigidTransform moment_init_impl(const BinaryMask& omega, const BinaryMask& template_mask,
                                const DistanceField& template_field,
                                const ShapeEnergyParams& params) {
    const Moments mo = mask_moments(omega);
    const Moments mt = mask_moments(template_mask);

    RigidTransform t;
    t.c = mo.centroid;
    t.alpha = mt.scale / mo.scale;

    // Principal axes are only defined up to a half turn.
    RigidTransform a = t, b = t;
    a.omega_angle = mt.theta - mo.theta;
    b.omega_angle = a.omega_angle + std::numbers::pi_v<double>;
    const double ea = shape_energy(omega, template_field, template_mask, a, params);
    const double eb = shape_energy(omega, template_field, template_mask, b, params);
    return ea <= eb ? a : b;
}

// Catmull-Rom interpolation weights and their first two derivatives.
inline void cr_weights(double t, double w[4]) {
    const double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
}
inline void cr_weights_d1(double t, double w[4]) {
    const double t2 = t * t;
    w[0] = 0.5 * (-3.0 * t2 + 4.0 * t - 1.0);
    w[1] = 0.5 * (9.0 * t2 - 10.0 * t);
    w[2] = 0.5 * (-9.0 * t2 + 8.0 * t + 1.0);
    w[3] = 0.5 * (3.0 * t2 - 2.0 * t);
}
inline void cr_weights_d2(double t, double w[4]) {
    w[0] = 0.5 * (-6.0 * t + 4.0);
    w[1] = 0.5 * (18.0 * t - 10.0);
    w[2] = 0.5 * (-18.0 * t + 8.0);
    w[3] = 0.5 * (6.0 * t - 2.0);
}

struct FieldSample {
    double value;
    double dx, dy;
    double dxx, dxy, dyy;
};

// Template raster embedded in a margin wide enough that any transform the
// optimizer can reach still samples a real distance value; the signed
// distance is rebuilt on the padded canvas so values extend smoothly.
class PaddedTemplate {
  public:
    explicit PaddedTemplate(const BinaryMask& mask) {
        pad_ = std::max(mask.width(), mask.height()) + 16;
        BinaryMask big(mask.width() + 2 * pad_, mask.height() + 2 * pad_);
        for (int y = 0; y < mask.height(); ++y)
            for (int x = 0; x < mask.width(); ++x)
                big.at(x + pad_, y + pad_) = mask.at(x, y);
        field_ = signed_distance(big);
    }

    // Value-only path for energy evaluations inside line searches.
    double sample_value(Vec2 q) const {
        const double px = q.x + pad_;
        const double py = q.y + pad_;
        const int w = field_.width(), h = field_.height();
        if (px >= 1.0 && px <= w - 2.0 && py >= 1.0 && py <= h - 2.0) {
            int x0 = (int)std::floor(px);
            int y0 = (int)std::floor(py);
            x0 = std::clamp(x0, 1, w - 3);
            y0 = std::clamp(y0, 1, h - 3);
            double wx[4], wy[4];
            cr_weights(px - x0, wx);
            cr_weights(py - y0, wy);
            const double* base = field_.data().data() + (size_t)(y0 - 1) * w + (x0 - 1);
            double v = 0.0;
            for (int i = 0; i < 4; ++i) {
                const double* r = base + (size_t)i * w;
                v += wy[i] * (wx[0] * r[0] + wx[1] * r[1] + wx[2] * r[2] + wx[3] * r[3]);
            }
            return v;
        }
        return sample(q).value;
    }

    // q in template coordinates (centroid already added by the caller).
    FieldSample sample(Vec2 q) const {
        const double px = q.x + pad_;
        const double py = q.y + pad_;
        const int w = field_.width(), h = field_.height();
        // Interpolation needs a full 4x4 support inside the raster.
        if (px >= 1.0 && px <= w - 2.0 && py >= 1.0 && py <= h - 2.0)
            return sample_core(px, py);
        // Far outside the padded canvas: decay along the distance to the
        // nearest valid point. Not smooth, but only reachable by rejected
        // trial steps; the value still decreases away from the shape.
        const double cxp = std::clamp(px, 1.0, w - 2.0);
        const double cyp = std::clamp(py, 1.0, h - 2.0);
        FieldSample s = sample_core(cxp, cyp);
        const double ox = px - cxp, oy = py - cyp;
        const double d = std::sqrt(ox * ox + oy * oy);
        s.value -= d;
        if (d > 0.0) {
            s.dx = -ox / d;
            s.dy = -oy / d;
        }
        s.dxx = s.dxy = s.dyy = 0.0;
        return s;
    }

  private:
    FieldSample sample_core(double px, double py) const {
        const int w = field_.width();
        int x0 = (int)std::floor(px);
        int y0 = (int)std::floor(py);
        x0 = std::clamp(x0, 1, field_.width() - 3);
        y0 = std::clamp(y0, 1, field_.height() - 3);
        const double tx = px - x0, ty = py - y0;

        double wx[4], wxd[4], wxdd[4], wy[4], wyd[4], wydd[4];
        cr_weights(tx, wx);
        cr_weights_d1(tx, wxd);
        cr_weights_d2(tx, wxdd);
        cr_weights(ty, wy);
        cr_weights_d1(ty, wyd);
        cr_weights_d2(ty, wydd);

        double row[4], rowd[4], rowdd[4];
        const double* base = field_.data().data() + (size_t)(y0 - 1) * w + (x0 - 1);
        for (int i = 0; i < 4; ++i) {
            const double* r = base + (size_t)i * w;
            row[i] = wx[0] * r[0] + wx[1] * r[1] + wx[2] * r[2] + wx[3] * r[3];
            rowd[i] = wxd[0] * r[0] + wxd[1] * r[1] + wxd[2] * r[2] + wxd[3] * r[3];
            rowdd[i] = wxdd[0] * r[0] + wxdd[1] * r[1] + wxdd[2] * r[2] + wxdd[3] * r[3];
        }
        FieldSample s;
        s.value = wy[0] * row[0] + wy[1] * row[1] + wy[2] * row[2] + wy[3] * row[3];
        s.dx = wy[0] * rowd[0] + wy[1] * rowd[1] + wy[2] * rowd[2] + wy[3] * rowd[3];
        s.dy = wyd[0] * row[0] + wyd[1] * row[1] + wyd[2] * row[2] + wyd[3] * row[3];
        s.dxx = wy[0] * rowdd[0] + wy[1] * rowdd[1] + wy[2] * rowdd[2] + wy[3] * rowdd[3];
        s.dxy = wyd[0] * rowd[0] + wyd[1] * rowd[1] + wyd[2] * rowd[2] + wyd[3] * rowd[3];
        s.dyy = wydd[0] * row[0] + wydd[1] * row[1] + wydd[2] * row[2] + wydd[3] * row[3];
        return s;
    }

    DistanceField field_;
    int pad_ = 0;
};

// Everything fixed across iterations when aligning one shape pair.
struct AlignProblem {
    int width = 0, height = 0;
    std::vector<uint8_t> chi_omega;
    std::vector<double> delta_omega;  // delta_eps(phi_omega)
    PaddedTemplate tmpl;
    Vec2 anchor;  // template foreground centroid
    double lambda = 2.0;

    AlignProblem(const DistanceField& omega_field, const BinaryMask& template_mask,
                 const ShapeEnergyParams& params, const SmoothingParams& smoothing)
        : tmpl(template_mask) {
        width = omega_field.width();
        height = omega_field.height();
        lambda = params.lambda;
        anchor = mask_centroid(template_mask);
        chi_omega.resize(omega_field.size());
        delta_omega.resize(omega_field.size());
        for (size_t i = 0; i < omega_field.size(); ++i) {
            chi_omega[i] = omega_field[i] > 0.0 ? 1 : 0;
            delta_omega[i] = delta_eps(omega_field[i], smoothing.epsilon);
        }
    }

    double energy(const RigidTransform& t) const {
        double e = 0.0;
        size_t i = 0;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x, ++i) {
                const Vec2 q = t.apply({(double)x, (double)y}) + anchor;
                const double v = tmpl.sample_value(q);
                const double d = (double)chi_omega[i] - (v > 0.0 ? 1.0 : 0.0);
                e += (d * d + delta_omega[i]) * pow_abs(v, lambda);
            }
        return e;
    }

    // Gradient and (optionally) Hessian over [alpha, c_x, c_y, omega].
    void derivatives(const RigidTransform& t, const SmoothingParams& smoothing, Vec4* grad,
                     Mat4* hess) const {
        const double co = std::cos(t.omega_angle);
        const double si = std::sin(t.omega_angle);
        const double lam = lambda;
        Vec4 g{};
        Mat4 h{};

        size_t i = 0;
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x, ++i) {
                const double rx = x - t.c.x, ry = y - t.c.y;
                const double rot_x = co * rx - si * ry;   // R * rel
                const double rot_y = si * rx + co * ry;
                const double rotp_x = -si * rx - co * ry; // R' * rel
                const double rotp_y = co * rx - si * ry;
                const Vec2 q{t.alpha * rot_x + anchor.x, t.alpha * rot_y + anchor.y};
                const FieldSample s = tmpl.sample(q);

                const double v = s.value;
                const double dchi = (double)chi_omega[i] - (v > 0.0 ? 1.0 : 0.0);
                const double B = dchi * dchi + delta_omega[i];
                const double sgn = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
                const double g1 = v != 0.0 ? lam * pow_abs(v, lam - 1.0) * sgn : 0.0;

                // dT/dp in template coordinates, columns = parameters.
                const double jx[4] = {rot_x, -t.alpha * co, t.alpha * si, t.alpha * rotp_x};
                const double jy[4] = {rot_y, -t.alpha * si, -t.alpha * co, t.alpha * rotp_y};
                double jsc[4];
                for (int a = 0; a < 4; ++a) jsc[a] = s.dx * jx[a] + s.dy * jy[a];

                const double bg1 = B * g1;
                for (int a = 0; a < 4; ++a) g[a] += bg1 * jsc[a];

                if (!hess) continue;

                const double t1 =
                    (lam != 1.0 && v != 0.0) ? lam * (lam - 1.0) * pow_abs(v, lam - 2.0) : 0.0;
                // lambda = 1 revives the characteristic-jump contribution the
                // curvature term loses when lambda*(lambda-1) vanishes.
                const double rep =
                    lam == 1.0 ? -2.0 * delta_eps(v, smoothing.epsilon) * dchi * sgn : 0.0;

                // d2T/dpdq, nonzero entries only.
                double ddx[4][4] = {};
                double ddy[4][4] = {};
                ddx[0][1] = -co;
                ddy[0][1] = -si;
                ddx[0][2] = si;
                ddy[0][2] = -co;
                ddx[0][3] = rotp_x;
                ddy[0][3] = rotp_y;
                ddx[1][3] = t.alpha * si;
                ddy[1][3] = -t.alpha * co;
                ddx[2][3] = t.alpha * co;
                ddy[2][3] = t.alpha * si;
                ddx[3][3] = -t.alpha * rot_x;
                ddy[3][3] = -t.alpha * rot_y;

                for (int a = 0; a < 4; ++a)
                    for (int b = a; b < 4; ++b) {
                        const double curve = s.dxx * jx[a] * jx[b] + s.dyy * jy[a] * jy[b] +
                                             s.dxy * (jx[a] * jy[b] + jy[a] * jx[b]);
                        const double bend = s.dx * ddx[a][b] + s.dy * ddy[a][b];
                        double val = (B * t1 + rep) * jsc[a] * jsc[b] +
                                     bg1 * (curve + bend);
                        h[a * 4 + b] += val;
                    }
            }

        if (grad) *grad = g;
        if (hess) {
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < a; ++b) h[a * 4 + b] = h[b * 4 + a];
            *hess = h;
        }
    }
};

BinaryMask mask_from_field(const DistanceField& field) {
    BinaryMask m(field.width(), field.height());
    for (size_t i = 0; i < field.size(); ++i) m[i] = field[i] > 0.0 ? 1 : 0;
    return m;
}

// Solve a*x = -g by Cholesky; false when the matrix is not positive definite.
bool solve_newton(const Mat4& a, const Vec4& g, Vec4& x) {
    double l[16] = {};
    double max_diag = 0.0;
    for (int k = 0; k < 4; ++k) max_diag = std::max(max_diag, std::fabs(a[k * 4 + k]));
    const double floor = std::max(1e-300, 1e-12 * max_diag);
    for (int k = 0; k < 4; ++k) {
        double d = a[k * 4 + k];
        for (int j = 0; j < k; ++j) d -= l[k * 4 + j] * l[k * 4 + j];
        if (!(d > floor)) return false;
        l[k * 4 + k] = std::sqrt(d);
        for (int i = k + 1; i < 4; ++i) {
            double v = a[i * 4 + k];
            for (int j = 0; j < k; ++j) v -= l[i * 4 + j] * l[k * 4 + j];
            l[i * 4 + k] = v / l[k * 4 + k];
        }
    }
    double yv[4];
    for (int k = 0; k < 4; ++k) {
        double v = -g[k];
        for (int j = 0; j < k; ++j) v -= l[k * 4 + j] * yv[j];
        yv[k] = v / l[k * 4 + k];
    }
    for (int k = 3; k >= 0; --k) {
        double v = yv[k];
        for (int j = k + 1; j < 4; ++j) v -= l[j * 4 + k] * x[j];
        x[k] = v / l[k * 4 + k];
    }
    return true;
}

Vec4 as_params(const RigidTransform& t) {
    return {t.alpha, t.c.x, t.c.y, t.omega_angle};
}

RigidTransform from_params(const Vec4& p, const AlignConfig& cfg) {
    RigidTransform t;
    t.alpha = std::clamp(p[0], cfg.alpha_min, cfg.alpha_max);
    t.c = {p[1], p[2]};
    t.omega_angle = p[3];
    return t;
}

}  // namespace

RigidTransform moment_init(const BinaryMask& omega, const BinaryMask& template_mask,
                           const ShapeEnergyParams& params) {
    return moment_init_impl(omega, template_mask, signed_distance(template_mask), params);
}

RigidTransform moment_init(const BinaryMask& omega, const TemplateEntry& tmpl,
                           const ShapeEnergyParams& params) {
    return moment_init_impl(omega, tmpl.mask, tmpl.field, params);
}

double alignment_energy(const DistanceField& omega_field, const DistanceField& template_field,
                        const RigidTransform& t, const ShapeEnergyParams& params,
                        const SmoothingParams& smoothing) {
    AlignProblem problem(omega_field, mask_from_field(template_field), params, smoothing);
    return problem.energy(t);
}

Vec4 energy_gradient(const DistanceField& omega_field, const DistanceField& template_field,
                     const RigidTransform& t, const ShapeEnergyParams& params,
                     const SmoothingParams& smoothing) {
    AlignProblem problem(omega_field, mask_from_field(template_field), params, smoothing);
    Vec4 g{};
    problem.derivatives(t, smoothing, &g, nullptr);
    return g;
}

Mat4 energy_hessian(const DistanceField& omega_field, const DistanceField& template_field,
                    const RigidTransform& t, const ShapeEnergyParams& params,
                    const SmoothingParams& smoothing) {
    AlignProblem problem(omega_field, mask_from_field(template_field), params, smoothing);
    Mat4 h{};
    problem.derivatives(t, smoothing, nullptr, &h);
    return h;
}

AlignmentReport align(const BinaryMask& omega, const TemplateEntry& tmpl,
                      const RigidTransform& init, const ShapeEnergyParams& params,
                      const SmoothingParams& smoothing, const AlignConfig& config) {
    const DistanceField omega_field = signed_distance(omega);
    AlignProblem problem(omega_field, tmpl.mask, params, smoothing);

    RigidTransform start = init;
    start.alpha = std::clamp(start.alpha, config.alpha_min, config.alpha_max);

    RigidTransform cur = start;
    double energy = problem.energy(cur);
    if (!std::isfinite(energy))
        throw NonFiniteEnergy("align: non-finite energy at the initial transform");

    AlignmentReport report;
    report.transform = cur;
    report.final_energy = energy;

    for (int iter = 1; iter <= config.max_iter; ++iter) {
        report.iterations = iter;
        Vec4 g{};
        Mat4 h{};
        problem.derivatives(cur, smoothing, &g, &h);
        for (double v : g)
            if (!std::isfinite(v))
                throw NonFiniteEnergy("align: non-finite gradient during iteration " +
                                      std::to_string(iter));

        bool accepted = false;
        RigidTransform next;
        double next_energy = 0.0;

        Vec4 dir{};
        bool hess_ok = true;
        for (double v : h)
            if (!std::isfinite(v)) hess_ok = false;
        if (hess_ok) hess_ok = solve_newton(h, g, dir);
        if (hess_ok) {
            double step = 1.0;
            const Vec4 p = as_params(cur);
            for (int bt = 0; bt <= 20 && !accepted; ++bt, step *= 0.5) {
                const RigidTransform trial = from_params(
                    {p[0] + step * dir[0], p[1] + step * dir[1], p[2] + step * dir[2],
                     p[3] + step * dir[3]},
                    config);
                const double e = problem.energy(trial);
                if (std::isfinite(e) && e < energy) {
                    accepted = true;
                    next = trial;
                    next_energy = e;
                }
            }
        }

        if (!accepted) {
            // Gradient fallback with the step scaled to unit parameter motion.
            double gmax = 0.0;
            for (double v : g) gmax = std::max(gmax, std::fabs(v));
            double step = 1.0 / std::max(1.0, gmax);
            const Vec4 p = as_params(cur);
            for (int bt = 0; bt <= 20 && !accepted; ++bt, step *= 0.5) {
                const RigidTransform trial = from_params(
                    {p[0] - step * g[0], p[1] - step * g[1], p[2] - step * g[2],
                     p[3] - step * g[3]},
                    config);
                const double e = problem.energy(trial);
                if (std::isfinite(e) && e < energy) {
                    accepted = true;
                    next = trial;
                    next_energy = e;
                }
            }
            if (accepted) ++report.fallback_steps;
        }

        if (!accepted) {
            // No descent in either direction: treat as stationary.
            report.converged = true;
            break;
        }

        const double move = std::max(
            std::max(std::fabs(next.alpha - cur.alpha), std::fabs(next.omega_angle - cur.omega_angle)),
            std::max(std::fabs(next.c.x - cur.c.x), std::fabs(next.c.y - cur.c.y)));
        const double decrease = energy - next_energy;
        cur = next;
        energy = next_energy;
        if (move < config.tol || decrease < config.min_energy_decrease) {
            report.converged = true;
            break;
        }
    }

    report.transform = cur;
    report.final_energy = energy;

    // The continuous objective can disagree with the discrete energy by a
    // hair; never hand back something worse than the starting point.
    const double disc_cur = shape_energy(omega, tmpl.field, tmpl.mask, cur, params);
    const double disc_init = shape_energy(omega, tmpl.field, tmpl.mask, start, params);
    if (!(disc_cur <= disc_init)) {
        report.transform = start;
        report.final_energy = problem.energy(start);
    }
    return report;
}

}  // namespace mmcut
