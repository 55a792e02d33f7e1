#include "walktrace/greens.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <mutex>
#include <ostream>
#include <unordered_map>

#include "walktrace/error.hpp"
#include "walktrace/stats.hpp"

namespace walktrace {

namespace {

void check_lambda_open(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw ParameterError("lambda must lie in (0, 1)");
}

}  // namespace

// --- GreensTable -----------------------------------------------------------

bool GreensTable::contains(const LatticePoint& x) const noexcept {
    if (x.d != d) return false;
    for (int i = 0; i < d; ++i)
        if (x[i] < -radius || x[i] > radius) return false;
    return true;
}

std::size_t GreensTable::index(const LatticePoint& x) const {
    if (!contains(x)) throw BoundsError("point outside the Green's function box");
    std::size_t idx = 0;
    for (int i = 0; i < d; ++i) idx = idx * side() + static_cast<std::size_t>(x[i] + radius);
    return idx;
}

double GreensTable::at(const LatticePoint& x) const { return contains(x) ? values[index(x)] : 0.0; }

double GreensTable::total() const { return pairwise_sum(values); }

double GreensTable::sum_of_squares() const {
    std::vector<double> sq(values.size());
    std::transform(values.begin(), values.end(), sq.begin(), [](double g) { return g * g; });
    return pairwise_sum(sq);
}

GreensTable green_table(double lambda, std::optional<int> radius, std::size_t memory_budget) {
    check_lambda_open(lambda);
    GreensTable table;
    table.lambda = lambda;
    if (radius) {
        if (*radius < 0) throw ParameterError("radius must be nonnegative");
        table.radius = *radius;
    } else {
        // Smallest J with lambda^(J+1) <= target.
        const double needed = std::ceil(std::log(kGreenTailTarget) / std::log(lambda)) - 1.0;
        if (needed > 1e6) throw CapacityError("horizon for lambda too large for a box table");
        table.radius = std::max(0, static_cast<int>(needed));
    }
    table.horizon = table.radius;
    table.truncation_bound = std::pow(lambda, table.horizon + 1) / (1.0 - lambda);

    const std::size_t side = table.side();
    const std::size_t padded = side + 2;
    const double cells = std::pow(static_cast<double>(side), 4) + std::pow(static_cast<double>(padded), 4);
    if (cells * sizeof(double) > static_cast<double>(memory_budget))
        throw CapacityError("Green's function box of radius " + std::to_string(table.radius) +
                            " exceeds the memory budget");

    // Work array on a box padded by one so neighbour reads never leave it.
    // p_j lives on the sublattice of parity j, so p_j and p_{j-1} share one
    // array: step j overwrites only parity-j sites and reads parity j-1.
    const std::size_t s1 = padded;
    const std::size_t s2 = s1 * padded;
    const std::size_t s3 = s2 * padded;
    std::vector<double> p(s3 * padded, 0.0);
    table.values.assign(side * side * side * side, 0.0);

    const auto r = static_cast<std::int64_t>(table.radius);
    const std::int64_t c = r + 1;  // padded index of coordinate 0
    auto pidx = [&](std::int64_t a, std::int64_t b, std::int64_t e, std::int64_t f) {
        return static_cast<std::size_t>(a + c) * s3 + static_cast<std::size_t>(b + c) * s2 +
               static_cast<std::size_t>(e + c) * s1 + static_cast<std::size_t>(f + c);
    };
    auto gidx = [&](std::int64_t a, std::int64_t b, std::int64_t e, std::int64_t f) {
        const auto sd = static_cast<std::int64_t>(side);
        return static_cast<std::size_t>((((a + r) * sd + (b + r)) * sd + (e + r)) * sd + (f + r));
    };

    p[pidx(0, 0, 0, 0)] = 1.0;
    table.values[gidx(0, 0, 0, 0)] = 1.0;
    double weight = 1.0;
    for (std::int64_t j = 1; j <= table.horizon; ++j) {
        weight *= lambda;
        for (std::int64_t a = -j; a <= j; ++a) {
            const std::int64_t ra = j - std::abs(a);
            for (std::int64_t b = -ra; b <= ra; ++b) {
                const std::int64_t rb = ra - std::abs(b);
                for (std::int64_t e = -rb; e <= rb; ++e) {
                    const std::int64_t re = rb - std::abs(e);
                    // |a|+|b|+|e|+|f| must have the parity of j, and -re does.
                    std::size_t idx = pidx(a, b, e, -re);
                    std::size_t out = gidx(a, b, e, -re);
                    for (std::int64_t f = -re; f <= re; f += 2, idx += 2, out += 2) {
                        const double v = 0.125 * (p[idx - 1] + p[idx + 1] + p[idx - s1] + p[idx + s1] +
                                                  p[idx - s2] + p[idx + s2] + p[idx - s3] + p[idx + s3]);
                        p[idx] = v;
                        table.values[out] += weight * v;
                    }
                }
            }
        }
    }
    return table;
}

void write_green_table(std::ostream& out, const GreensTable& table) {
    static_assert(std::endian::native == std::endian::little, "table export assumes a little-endian host");
    const auto radius = static_cast<std::uint32_t>(table.radius);
    const auto d = static_cast<std::uint32_t>(table.d);
    out.write(reinterpret_cast<const char*>(&table.lambda), sizeof(double));
    out.write(reinterpret_cast<const char*>(&radius), sizeof radius);
    out.write(reinterpret_cast<const char*>(&d), sizeof d);
    out.write(reinterpret_cast<const char*>(table.values.data()),
              static_cast<std::streamsize>(table.values.size() * sizeof(double)));
    if (!out) throw IoError("failed to write Green's function table");
}

GreensTable read_green_table(std::istream& in) {
    GreensTable table;
    std::uint32_t radius = 0;
    std::uint32_t d = 0;
    in.read(reinterpret_cast<char*>(&table.lambda), sizeof(double));
    in.read(reinterpret_cast<char*>(&radius), sizeof radius);
    in.read(reinterpret_cast<char*>(&d), sizeof d);
    if (!in) throw InputError("truncated Green's function table header");
    if (d != 4) throw InputError("only four-dimensional tables are supported");
    table.radius = static_cast<int>(radius);
    table.d = static_cast<int>(d);
    table.horizon = table.radius;
    table.truncation_bound = std::pow(table.lambda, table.horizon + 1) / (1.0 - table.lambda);
    const std::size_t count = table.side() * table.side() * table.side() * table.side();
    table.values.resize(count);
    in.read(reinterpret_cast<char*>(table.values.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw InputError("truncated Green's function table body");
    return table;
}

// --- return probabilities ----------------------------------------------------

namespace {

/// Lazily extended cache of p_{2m}(0); shared across threads.
class ReturnProbabilityCache {
public:
    std::vector<double> prefix(std::int64_t max_steps) {
        const auto half = static_cast<std::size_t>(max_steps / 2);
        std::lock_guard lock(mutex_);
        extend(half);
        std::vector<double> out(static_cast<std::size_t>(max_steps) + 1, 0.0);
        for (std::size_t m = 0; m <= half; ++m) out[2 * m] = even_[m];
        return out;
    }

private:
    void extend(std::size_t half) {
        if (half < even_.size()) return;
        // log q_k and log factorials up to 2 * half.
        const std::size_t old = even_.size();
        log_q_.resize(half + 1);
        log_fact_.resize(2 * half + 1);
        for (std::size_t i = fact_done_; i < log_fact_.size(); ++i)
            log_fact_[i] = (i == 0) ? 0.0 : log_fact_[i - 1] + std::log(static_cast<double>(i));
        fact_done_ = log_fact_.size();
        for (std::size_t k = q_done_; k <= half; ++k) {
            // q_k = (C(2k,k) 4^-k)^2
            const double lc = log_fact_[2 * k] - 2.0 * log_fact_[k] - static_cast<double>(2 * k) * std::log(2.0);
            log_q_[k] = 2.0 * lc;
        }
        q_done_ = half + 1;
        even_.resize(half + 1);
        const double ln2 = std::log(2.0);
        for (std::size_t m = old; m <= half; ++m) {
            const double base = log_fact_[2 * m] - static_cast<double>(2 * m) * ln2;
            std::vector<double> terms(m + 1);
            for (std::size_t k = 0; k <= m; ++k)
                terms[k] = std::exp(base - log_fact_[2 * k] - log_fact_[2 * (m - k)] + log_q_[k] + log_q_[m - k]);
            even_[m] = pairwise_sum(terms);
        }
    }

    std::mutex mutex_;
    std::vector<double> even_;
    std::vector<double> log_q_;
    std::vector<double> log_fact_;
    std::size_t fact_done_ = 0;
    std::size_t q_done_ = 0;
};

ReturnProbabilityCache& return_cache() {
    static ReturnProbabilityCache cache;
    return cache;
}

}  // namespace

std::vector<double> return_probabilities(std::int64_t max_steps) {
    if (max_steps < 0) throw ParameterError("step count must be nonnegative");
    if (max_steps > kMaxReturnSteps) throw CapacityError("return-probability horizon over budget");
    return return_cache().prefix(max_steps);
}

double return_probability(std::int64_t steps) {
    if (steps < 0) throw ParameterError("step count must be nonnegative");
    if (steps % 2 != 0) return 0.0;
    return return_probabilities(steps).back();
}

SeriesValue expected_G_aggregate(double lambda) {
    check_lambda_open(lambda);
    // Tail after even step S: p_s(0) <= p_S(0) for even s > S, and
    // sum_{i>=1} (2(S+2i)+1) lambda^(S+2i) = lambda^S [(2S+1) mu/(1-mu) + 4 mu/(1-mu)^2], mu = lambda^2.
    const double mu = lambda * lambda;
    auto tail = [&](std::int64_t s, double p_s) {
        const double lam_s = std::pow(lambda, static_cast<double>(s));
        return p_s * lam_s *
               ((2.0 * static_cast<double>(s) + 1.0) * mu / (1.0 - mu) + 4.0 * mu / ((1.0 - mu) * (1.0 - mu)));
    };
    constexpr double target = 1e-13;

    // Predicted horizon from p_s(0) ~ 0.82 / s^2; beyond the budget the
    // quadratic cost of the pair-split table is not worth paying.
    std::int64_t predicted = 64;
    while (predicted <= kMaxSeriesSteps &&
           tail(predicted, 0.82 / (static_cast<double>(predicted) * static_cast<double>(predicted))) > target)
        predicted *= 2;
    if (predicted > kMaxSeriesSteps) return expected_G_aggregate_integral(lambda);

    std::int64_t steps = std::max<std::int64_t>(64, predicted / 2);
    while (true) {
        const std::vector<double> p = return_probabilities(steps);
        if (tail(steps, p.back()) <= target || steps >= kMaxSeriesSteps) {
            std::vector<double> terms;
            terms.reserve(p.size() / 2 + 1);
            double lam_s = 1.0;
            for (std::int64_t s = 0; s <= steps; ++s) {
                if (s % 2 == 0) terms.push_back((2.0 * static_cast<double>(s) + 1.0) * lam_s * p[static_cast<std::size_t>(s)]);
                lam_s *= lambda;
            }
            SeriesValue out;
            out.value = pairwise_sum(terms);
            out.truncation_bound = tail(steps, p.back());
            out.terms = steps + 1;
            if (out.truncation_bound > target) return expected_G_aggregate_integral(lambda);
            return out;
        }
        steps = std::min(kMaxSeriesSteps, steps * 2);
    }
}

namespace {

/// G_lambda(0) + 2 lambda G'_lambda(0) by the trapezoid rule in u = log t:
///   G(0)  = int e^{-(1-lambda) t} J0^4 dt,
///   G'(0) = int t e^{-(1-lambda) t} J0^3 J1 dt,
/// with Jk = e^{-s} I_k(s) at s = lambda t / 4.
double aggregate_integral(double lambda, double step) {
    const double rate = 1.0 - lambda;
    const double t_max = (50.0 + 2.0 * std::log(50.0 / rate + 50.0)) / rate;
    const double u_min = std::log(1e-17);
    const double u_max = std::log(t_max);
    const auto nodes = static_cast<std::size_t>(std::ceil((u_max - u_min) / step)) + 1;
    std::vector<double> terms(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        const double t = std::exp(u_min + step * static_cast<double>(i));
        const std::vector<double> b = scaled_bessel_i(lambda * t / 4.0, 1);
        const double j0 = b[0];
        const double j1 = b[1];
        const double w = step * t * std::exp(-rate * t);
        terms[i] = w * j0 * j0 * j0 * (j0 + 2.0 * lambda * t * j1);
    }
    return pairwise_sum(terms);
}

}  // namespace

SeriesValue expected_G_aggregate_integral(double lambda) {
    check_lambda_open(lambda);
    constexpr double step = 0.05;
    SeriesValue out;
    out.method = AggregateMethod::bessel_integral;
    out.value = aggregate_integral(lambda, step);
    out.truncation_bound = std::abs(out.value - aggregate_integral(lambda, 2.0 * step)) + 1e-12 * out.value;
    out.terms = static_cast<std::int64_t>(std::ceil((std::log(1e7) - std::log(1e-17)) / step));
    return out;
}

double expected_G_aggregate(const GreensTable& table) {
    return 2.0 * table.sum_of_squares() - table.origin_value();
}

// --- Bessel representation ---------------------------------------------------

std::vector<double> scaled_bessel_i(double s, int kmax) {
    if (!(s >= 0.0)) throw ParameterError("Bessel argument must be nonnegative");
    if (kmax < 0) throw ParameterError("Bessel order must be nonnegative");
    std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
    if (s == 0.0) {
        out[0] = 1.0;
        return out;
    }
    // Miller: recur downward from far beyond the significant orders, then
    // normalize with e^{-s} (I_0 + 2 sum_{k>=1} I_k) = 1.
    const int start = kmax + 32 + static_cast<int>(std::ceil(12.0 * std::sqrt(s)));
    double next = 0.0;  // f_{k+1}
    double cur = 1e-30; // f_k
    double norm = 0.0;
    for (int k = start; k >= 1; --k) {
        const double prev = next + (2.0 * k / s) * cur;  // f_{k-1}
        if (k <= kmax) out[static_cast<std::size_t>(k)] = cur;
        norm += 2.0 * cur;
        next = cur;
        cur = prev;
        if (std::abs(cur) > 1e250) {
            const double scale = 1e-250;
            next *= scale;
            cur *= scale;
            norm *= scale;
            for (int i = k; i <= kmax; ++i) out[static_cast<std::size_t>(i)] *= scale;
        }
    }
    out[0] = cur;
    norm += cur;
    for (double& v : out) v /= norm;
    return out;
}

GreenEvaluator::GreenEvaluator(double lambda, int max_index, double step) : lambda_(lambda), max_index_(max_index) {
    check_lambda_open(lambda);
    if (max_index < 0) throw ParameterError("max_index must be nonnegative");
    if (!(step > 0.0)) throw ParameterError("quadrature step must be positive");
    // t = e^u. The integrand is bounded by e^{-(1-lambda) t}, so t beyond
    // t_max contributes < 1e-17; below t_min it contributes < t_min.
    const double t_max = (45.0 + std::log(45.0 / (1.0 - lambda) + 45.0)) / (1.0 - lambda);
    const double u_min = std::log(1e-17);
    const double u_max = std::log(t_max);
    const auto nodes = static_cast<std::size_t>(std::ceil((u_max - u_min) / step)) + 1;
    const std::size_t width = static_cast<std::size_t>(max_index) + 1;
    weights_.resize(nodes);
    bessel_.resize(nodes * width);
    for (std::size_t i = 0; i < nodes; ++i) {
        const double u = u_min + step * static_cast<double>(i);
        const double t = std::exp(u);
        weights_[i] = step * t * std::exp(-(1.0 - lambda) * t);
        const std::vector<double> b = scaled_bessel_i(lambda * t / 4.0, max_index);
        std::copy(b.begin(), b.end(), bessel_.begin() + static_cast<std::ptrdiff_t>(i * width));
    }
}

double GreenEvaluator::operator()(const LatticePoint& x) const {
    if (x.d != 4) throw ParameterError("GreenEvaluator is four-dimensional");
    std::array<std::size_t, 4> k{};
    for (int i = 0; i < 4; ++i) {
        const auto a = static_cast<std::size_t>(std::abs(x[i]));
        if (a > static_cast<std::size_t>(max_index_)) throw BoundsError("point beyond GreenEvaluator range");
        k[static_cast<std::size_t>(i)] = a;
    }
    const std::size_t width = static_cast<std::size_t>(max_index_) + 1;
    std::vector<double> terms(weights_.size());
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        const double* row = bessel_.data() + i * width;
        terms[i] = weights_[i] * row[k[0]] * row[k[1]] * row[k[2]] * row[k[3]];
    }
    return pairwise_sum(terms);
}

// --- Monte Carlo of the aggregate ---------------------------------------------

AggregateMonteCarlo estimate_G_aggregate(double lambda, std::int64_t trials, std::uint64_t seed) {
    check_lambda_open(lambda);
    if (trials < 1) throw ParameterError("trials must be positive");
    GreenEvaluator green(lambda);
    std::unordered_map<std::uint64_t, double> memo;
    // G depends only on the multiset of |x_i|.
    auto lookup = [&](const LatticePoint& x) {
        std::array<std::uint64_t, 4> a{};
        for (int i = 0; i < 4; ++i) a[static_cast<std::size_t>(i)] = static_cast<std::uint64_t>(std::abs(x[i]));
        std::sort(a.begin(), a.end());
        const std::uint64_t key = a[0] | (a[1] << 16) | (a[2] << 32) | (a[3] << 48);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        const double v = green(x);
        memo.emplace(key, v);
        return v;
    };

    std::vector<double> samples(static_cast<std::size_t>(trials));
    for (std::int64_t t = 0; t < trials; ++t) {
        const std::uint64_t trial_seed = derive_seed(seed, static_cast<std::uint64_t>(t));
        StepSource clock(4, derive_seed(trial_seed, 0));
        const std::int64_t t2 = sample_killing_time(lambda, clock).value;
        const std::int64_t t3 = sample_killing_time(lambda, clock).value;
        double sum = lookup(LatticePoint(4));
        Walker s2(4, derive_seed(trial_seed, 2));
        for (std::int64_t j = 1; j <= t2; ++j) {
            s2.step();
            sum += lookup(s2.position());
        }
        Walker s3(4, derive_seed(trial_seed, 3));
        for (std::int64_t k = 1; k <= t3; ++k) {
            s3.step();
            sum += lookup(s3.position());
        }
        samples[static_cast<std::size_t>(t)] = sum;
    }
    const SampleSummary s = summarize(samples);
    return {s.mean, s.std_error, trials};
}

}  // namespace walktrace
