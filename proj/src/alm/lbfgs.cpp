#include <cmath>
#include <deque>

#include "hsdp/alm.hpp"

namespace hsdp {

namespace {

struct Point {
    double alpha = 0.0;
    double f     = 0.0;
    double dphi  = 0.0;
    RVec   g;
};

// Safeguarded cubic interpolation of the minimizer between two bracketing points.
double cubic_step(const Point &lo, const Point &hi) {
    const double d1 = lo.dphi + hi.dphi - 3.0 * (lo.f - hi.f) / (lo.alpha - hi.alpha);
    const double rad = d1 * d1 - lo.dphi * hi.dphi;
    const double a = std::min(lo.alpha, hi.alpha), b = std::max(lo.alpha, hi.alpha);
    double       t = 0.5 * (a + b);
    if(rad >= 0.0) {
        const double d2 = std::copysign(std::sqrt(rad), hi.alpha - lo.alpha);
        const double c  = hi.alpha - (hi.alpha - lo.alpha) * (hi.dphi + d2 - d1) / (hi.dphi - lo.dphi + 2.0 * d2);
        if(std::isfinite(c)) t = c;
    }
    const double margin = 0.1 * (b - a);
    return std::clamp(t, a + margin, b - margin);
}

} // namespace

LbfgsResult lbfgs_minimize(const Objective &f, RVec &x, const LbfgsOptions &opts) {
    LbfgsResult res;
    const auto  n = x.size();
    RVec        g(n);
    double      fx = f(x, g);
    res.evaluations = 1;
    if(!std::isfinite(fx)) throw NumericalFailure("objective is not finite at the starting point");

    std::deque<RVec>   S, Y;
    std::deque<double> rho;
    RVec               d(n), q(n);
    std::vector<double> a(static_cast<std::size_t>(opts.memory));
    res.status = "max_iters";

    for(int it = 0; it < opts.max_iters; ++it) {
        const double gnorm = g.norm();
        res.gnorm          = gnorm;
        if(gnorm <= opts.gtol * (1.0 + std::abs(fx))) {
            res.status = "converged";
            break;
        }
        // Two-loop recursion.
        q = g;
        for(int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
            a[i] = rho[i] * S[i].dot(q);
            q -= a[i] * Y[i];
        }
        double gamma = S.empty() ? 1.0 / std::max(gnorm, 1e-300) : S.back().dot(Y.back()) / Y.back().squaredNorm();
        if(S.empty()) gamma = std::min(1.0, 1.0 / gnorm);
        d = gamma * q;
        for(std::size_t i = 0; i < S.size(); ++i) {
            const double b = rho[i] * Y[i].dot(d);
            d += (a[i] - b) * S[i];
        }
        d = -d;
        double dphi0 = g.dot(d);
        if(!(dphi0 < 0.0)) {
            S.clear();
            Y.clear();
            rho.clear();
            d     = -g * std::min(1.0, 1.0 / gnorm);
            dphi0 = g.dot(d);
        }

        // Strong Wolfe line search.
        auto probe = [&](double alpha) {
            Point p;
            p.alpha = alpha;
            p.g.resize(n);
            p.f = f(x + alpha * d, p.g);
            ++res.evaluations;
            p.dphi = p.g.dot(d);
            return p;
        };
        const double f0 = fx;
        auto armijo_ok  = [&](const Point &p) { return std::isfinite(p.f) && p.f <= f0 + opts.c1 * p.alpha * dphi0; };
        auto curvature_ok = [&](const Point &p) { return std::abs(p.dphi) <= -opts.c2 * dphi0; };

        std::optional<Point> accepted;
        std::optional<Point> best_armijo;
        Point                prev{0.0, f0, dphi0, g};
        double               alpha = 1.0;
        auto                 zoom  = [&](Point lo, Point hi) -> std::optional<Point> {
            for(int z = 0; z < opts.max_linesearch; ++z) {
                Point p = probe(cubic_step(lo, hi));
                if(!armijo_ok(p) || p.f >= lo.f) {
                    hi = p;
                } else {
                    if(!best_armijo || p.f < best_armijo->f) best_armijo = p;
                    if(curvature_ok(p)) return p;
                    if(p.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                    lo = p;
                }
                if(std::abs(hi.alpha - lo.alpha) <= 1e-16 * std::max(1.0, hi.alpha)) break;
            }
            return std::nullopt;
        };
        for(int ls = 0; ls < opts.max_linesearch; ++ls) {
            Point p = probe(alpha);
            if(!armijo_ok(p) || (ls > 0 && p.f >= prev.f)) {
                accepted = zoom(prev, p);
                break;
            }
            if(!best_armijo || p.f < best_armijo->f) best_armijo = p;
            if(curvature_ok(p)) {
                accepted = p;
                break;
            }
            if(p.dphi >= 0.0) {
                accepted = zoom(p, prev);
                break;
            }
            prev = p;
            alpha *= 2.0;
        }
        // A sufficient-decrease point is still a valid step when curvature could not be met.
        if(!accepted && best_armijo && best_armijo->f < f0) accepted = best_armijo;
        if(!accepted) {
            res.line_search_failed = true;
            res.status             = "line_search_failed";
            break;
        }

        RVec s = accepted->alpha * d;
        RVec y = accepted->g - g;
        x += s;
        fx = accepted->f;
        g  = accepted->g;
        res.history.push_back(fx);
        ++res.iterations;
        const double sy = s.dot(y);
        if(sy > 1e-12 * s.norm() * y.norm()) {
            if(static_cast<int>(S.size()) == opts.memory) {
                S.pop_front();
                Y.pop_front();
                rho.pop_front();
            }
            S.push_back(std::move(s));
            Y.push_back(std::move(y));
            rho.push_back(1.0 / sy);
        }
    }
    res.f     = fx;
    res.gnorm = g.norm();
    return res;
}

RVec pack_hier(const HierPSD &H) {
    RVec        x(2 * static_cast<Eigen::Index>(H.parameter_count()));
    Eigen::Index p = 0;
    auto         put = [&](const cplx *data, Eigen::Index count) {
        for(Eigen::Index i = 0; i < count; ++i) {
            x(p++) = data[i].real();
            x(p++) = data[i].imag();
        }
    };
    for(const auto &f : H.levels.factors) put(f.data(), f.size());
    put(H.spike.data(), H.spike.size());
    return x;
}

void unpack_hier(const RVec &x, HierPSD &H) {
    if(x.size() != 2 * static_cast<Eigen::Index>(H.parameter_count()))
        throw InvalidInput("unpack_hier: vector length does not match the parameter count");
    Eigen::Index p   = 0;
    auto         get = [&](cplx *data, Eigen::Index count) {
        for(Eigen::Index i = 0; i < count; ++i) {
            data[i] = {x(p), x(p + 1)};
            p += 2;
        }
    };
    for(auto &f : H.levels.factors) get(f.data(), f.size());
    get(H.spike.data(), H.spike.size());
}

LbfgsResult minimize_hier(const std::function<double(const HierPSD &, HierGradient &)> &f, HierPSD &H,
                          const LbfgsOptions &opts) {
    HierPSD      work = H;
    HierGradient grad = H;
    RVec         x    = pack_hier(H);
    auto         obj  = [&](const RVec &v, RVec &g) {
        unpack_hier(v, work);
        const double val = f(work, grad);
        g                = pack_hier(grad);
        return val;
    };
    LbfgsResult res = lbfgs_minimize(obj, x, opts);
    unpack_hier(x, H);
    return res;
}

LbfgsResult inner_minimize(HierPSD &S, const DualLoss &loss, const LbfgsOptions &opts) {
    return minimize_hier([&](const HierPSD &s, HierGradient &g) { return loss.value_and_grad(s, g); }, S, opts);
}

LbfgsResult primal_fit(HierPSD &H, const PrimalFitObjective &obj, const LbfgsOptions &opts) {
    return minimize_hier([&](const HierPSD &m, HierGradient &g) { return obj.value_and_grad(m, g); }, H, opts);
}

} // namespace hsdp
