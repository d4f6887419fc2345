#include "coho/sft.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace coho {

namespace {

// smallest p dividing w.size() with w = (prefix of length p) repeated
std::vector<int> primitive_word(const std::vector<int>& w) {
    const size_t n = w.size();
    for (size_t p = 1; p < n; ++p) {
        if (n % p != 0) continue;
        bool ok = true;
        for (size_t i = p; i < n && ok; ++i) ok = (w[i] == w[i - p]);
        if (ok) return std::vector<int>(w.begin(), w.begin() + p);
    }
    return w;
}

long long lcm_ll(long long a, long long b) { return a / std::gcd(a, b) * b; }

} // namespace

SftBase::SftBase(Eigen::MatrixXi transition, double nu, int mixing_power)
    : m_(std::move(transition)), nu_(nu), mixing_power_(mixing_power) {
    if (m_.rows() != m_.cols() || m_.rows() < 1)
        throw Error("SftBase: transition matrix must be square");
    for (int i = 0; i < m_.rows(); ++i)
        for (int j = 0; j < m_.cols(); ++j)
            if (m_(i, j) != 0 && m_(i, j) != 1)
                throw Error("SftBase: transition entries must be 0/1");
    if (!(nu_ > 0.0 && nu_ < 1.0)) throw Error("SftBase: nu must lie in (0,1)");

    // find (or verify) N with M^N > 0; Wielandt bound caps the search
    const int k = alphabet_size();
    const int bound = (k - 1) * (k - 1) + 1;
    Eigen::MatrixXi pw = m_;
    int n = 1;
    auto positive = [](const Eigen::MatrixXi& a) { return (a.array() > 0).all(); };
    while (!positive(pw) && n < bound + 1) {
        Eigen::MatrixXi next = Eigen::MatrixXi::Zero(k, k);
        for (int i = 0; i < k; ++i)
            for (int l = 0; l < k; ++l)
                if (pw(i, l))
                    for (int j = 0; j < k; ++j)
                        if (m_(l, j)) next(i, j) = 1;
        pw = next;
        ++n;
    }
    if (!positive(pw)) throw Error("SftBase: transition matrix is not mixing");
    if (mixing_power_ == 0)
        mixing_power_ = n;
    else if (mixing_power_ < n)
        throw Error("SftBase: declared mixing power too small");
}

long long SftBase::fixed_point_count(int n) const {
    const int k = alphabet_size();
    using I128Mat = Eigen::Matrix<__int128, Eigen::Dynamic, Eigen::Dynamic>;
    I128Mat acc = I128Mat::Identity(k, k), base = I128Mat::Zero(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) base(i, j) = m_(i, j);
    for (int s = 0; s < n; ++s) acc = (acc * base).eval();
    __int128 tr = 0;
    for (int i = 0; i < k; ++i) tr += acc(i, i);
    if (tr > __int128(INT64_MAX)) throw CapacityExceeded("fixed_point_count overflow");
    return static_cast<long long>(tr);
}

SftBase SftBase::full_shift(int k, double nu) {
    return SftBase(Eigen::MatrixXi::Ones(k, k), nu);
}

SftBase SftBase::golden_mean(double nu) {
    Eigen::MatrixXi m(2, 2);
    m << 1, 1, 1, 0;
    return SftBase(m, nu);
}

SymbolicPoint::SymbolicPoint(std::vector<int> past, std::vector<int> core,
                             std::vector<int> future, long core_start)
    : past_(std::move(past)), core_(std::move(core)), future_(std::move(future)),
      core_start_(core_start) {
    if (past_.empty() || future_.empty())
        throw Error("SymbolicPoint: tail words must be nonempty");
    normalize();
}

SymbolicPoint SymbolicPoint::fixed(int symbol) {
    return SymbolicPoint({symbol}, {}, {symbol}, 0);
}

SymbolicPoint SymbolicPoint::periodic(const std::vector<int>& word) {
    if (word.empty()) throw Error("SymbolicPoint::periodic: empty word");
    return SymbolicPoint(word, {}, word, 0);
}

int SymbolicPoint::at(long i) const {
    const long lo = core_start_;
    const long hi = core_start_ + long(core_.size()) - 1;
    if (i >= lo && i <= hi) return core_[size_t(i - lo)];
    if (i < lo) {
        long off = lo - 1 - i;  // 0 means the tail letter adjacent to the core
        long lp = long(past_.size());
        return past_[size_t(lp - 1 - (off % lp))];
    }
    long off = i - hi - 1;
    return future_[size_t(off % long(future_.size()))];
}

std::vector<int> SymbolicPoint::window(long lo, long hi) const {
    std::vector<int> out;
    out.reserve(size_t(std::max<long>(0, hi - lo + 1)));
    for (long i = lo; i <= hi; ++i) out.push_back(at(i));
    return out;
}

SymbolicPoint SymbolicPoint::shifted(long n) const {
    SymbolicPoint r = *this;
    r.core_start_ -= n;
    r.normalize();
    return r;
}

bool SymbolicPoint::admissible_for(const SftBase& base) const {
    const int k = base.alphabet_size();
    auto ok_sym = [&](int s) { return s >= 0 && s < k; };
    for (int s : past_)
        if (!ok_sym(s)) return false;
    for (int s : core_)
        if (!ok_sym(s)) return false;
    for (int s : future_)
        if (!ok_sym(s)) return false;
    // every junction in a window covering both tail wrap-arounds and the core
    long lo = core_lo() - long(past_.size()) - 1;
    long hi = core_hi() + long(future_.size()) + 1;
    for (long i = lo; i < hi; ++i)
        if (!base.admissible(at(i), at(i + 1))) return false;
    return true;
}

void SymbolicPoint::normalize() {
    bool changed = true;
    while (changed) {
        changed = false;

        auto p = primitive_word(past_);
        if (p.size() != past_.size()) {
            // re-anchor: the primitive word read just left of the core
            past_ = window(core_lo() - long(p.size()), core_lo() - 1);
            changed = true;
        }
        auto f = primitive_word(future_);
        if (f.size() != future_.size()) {
            future_ = window(core_hi() + 1, core_hi() + long(f.size()));
            changed = true;
        }

        const long lp = long(past_.size());
        const long lf = long(future_.size());

        // absorb core letters into the past tail
        while (!core_.empty() && core_.front() == at(core_lo() - lp)) {
            std::vector<int> np = window(core_lo() + 1 - lp, core_lo());
            core_.erase(core_.begin());
            ++core_start_;
            past_ = std::move(np);
            changed = true;
        }
        // absorb into the future tail
        while (!core_.empty() && core_.back() == at(core_hi() + lf)) {
            std::vector<int> nf = window(core_hi(), core_hi() + lf - 1);
            core_.pop_back();
            future_ = std::move(nf);
            changed = true;
        }
        // with an empty core, slide the past/future boundary toward 0
        // (new tail words are read from the old representation first)
        while (core_.empty() && core_start_ > 0 && at(core_start_ - 1) == at(core_start_ - 1 + lf)) {
            long b = core_start_ - 1;
            std::vector<int> nf = window(b, b + lf - 1);
            std::vector<int> np = window(b - lp, b - 1);
            core_start_ = b;
            future_ = std::move(nf);
            past_ = std::move(np);
            changed = true;
        }
        while (core_.empty() && core_start_ < 0 && at(core_start_) == at(core_start_ - lp)) {
            long b = core_start_ + 1;
            std::vector<int> np = window(b - lp, b - 1);
            std::vector<int> nf = window(b, b + lf - 1);
            core_start_ = b;
            past_ = std::move(np);
            future_ = std::move(nf);
            changed = true;
        }
    }
}

long SymbolicPoint::compare_window_radius(const SymbolicPoint& other) const {
    long lpast = lcm_ll(long(past_.size()), long(other.past_.size()));
    long lfut = lcm_ll(long(future_.size()), long(other.future_.size()));
    long a = std::min({core_lo(), other.core_lo(), 0L});
    long b = std::max({core_hi(), other.core_hi(), -1L});
    return std::max(std::abs(a - lpast), std::abs(b + lfut)) + 1;
}

bool SymbolicPoint::operator==(const SymbolicPoint& other) const {
    long r = compare_window_radius(other);
    for (long i = -r; i <= r; ++i)
        if (at(i) != other.at(i)) return false;
    return true;
}

bool SymbolicPoint::operator<(const SymbolicPoint& other) const {
    // total order via the canonical text encoding of normalized points
    return to_string() < other.to_string();
}

std::string SymbolicPoint::to_string() const {
    auto emit_word = [](std::ostringstream& os, const std::vector<int>& w) {
        for (int s : w) {
            if (s < 0 || s > 9) throw Error("SymbolicPoint: printing needs alphabet <= 10");
            os << char('0' + s);
        }
    };
    const long d_lo = std::min(core_lo(), 0L);
    const long d_hi = std::max(core_hi(), -1L);
    std::ostringstream os;
    os << '(';
    emit_word(os, window(d_lo - long(past_.size()), d_lo - 1));
    os << ")^inf|";
    emit_word(os, window(d_lo, -1));
    os << '.';
    emit_word(os, window(0, d_hi));
    os << "|(";
    emit_word(os, window(d_hi + 1, d_hi + long(future_.size())));
    os << ")^inf";
    return os.str();
}

SymbolicPoint SymbolicPoint::parse(const std::string& text) {
    auto fail = [&]() -> void { throw Error("SymbolicPoint::parse: bad format: " + text); };
    auto word_of = [&](const std::string& s) {
        std::vector<int> w;
        for (char c : s) {
            if (c < '0' || c > '9') fail();
            w.push_back(c - '0');
        }
        return w;
    };
    size_t b1 = text.find(")^inf|");
    size_t b2 = text.rfind("|(");
    if (text.size() < 2 || text[0] != '(' || b1 == std::string::npos ||
        b2 == std::string::npos || b2 < b1)
        fail();
    std::string past_s = text.substr(1, b1 - 1);
    std::string mid = text.substr(b1 + 6, b2 - (b1 + 6));
    std::string fut_s = text.substr(b2 + 2);
    if (fut_s.size() < 5 || fut_s.substr(fut_s.size() - 5) != ")^inf") fail();
    fut_s = fut_s.substr(0, fut_s.size() - 5);
    size_t dot = mid.find('.');
    if (dot == std::string::npos) fail();
    std::vector<int> pre = word_of(mid.substr(0, dot));
    std::vector<int> post = word_of(mid.substr(dot + 1));
    std::vector<int> core = pre;
    core.insert(core.end(), post.begin(), post.end());
    return SymbolicPoint(word_of(past_s), core, word_of(fut_s), -long(pre.size()));
}

double sft_distance(const SymbolicPoint& x, const SymbolicPoint& y, const SftBase& base) {
    if (!x.admissible_for(base) || !y.admissible_for(base))
        throw Error("sft_distance: point not admissible for base");
    if (x == y) return 0.0;
    long r = std::max(x.core_hi(), y.core_hi());
    r = std::max(r, -std::min(x.core_lo(), y.core_lo()));
    r += long(lcm_ll(long(x.past_word().size()), long(y.past_word().size())));
    r += long(lcm_ll(long(x.future_word().size()), long(y.future_word().size())));
    r += 2;
    for (long n = 0; n <= r; ++n) {
        if (x.at(n) != y.at(n) || x.at(-n) != y.at(-n))
            return std::pow(base.nu(), double(n));
    }
    throw Error("sft_distance: internal inconsistency");  // unreachable: x != y
}

SymbolicPoint local_product(const SymbolicPoint& x, const SymbolicPoint& z) {
    if (x.at(0) != z.at(0))
        throw NotInProductRange("local_product: points differ at index 0");
    const long a = std::min(z.core_lo(), -1L);
    const long b = std::max(x.core_hi(), 0L);
    std::vector<int> core;
    core.reserve(size_t(b - a + 1));
    for (long i = a; i < 0; ++i) core.push_back(z.at(i));
    for (long i = 0; i <= b; ++i) core.push_back(x.at(i));
    std::vector<int> past = z.window(a - long(z.past_word().size()), a - 1);
    std::vector<int> fut = x.window(b + 1, b + long(x.future_word().size()));
    return SymbolicPoint(past, core, fut, a);
}

std::vector<PeriodicOrbit> enumerate_periodic_orbits(const SftBase& base, int n_max,
                                                     long long cap) {
    if (n_max < 1) throw Error("enumerate_periodic_orbits: n_max must be >= 1");
    long long budget = 0;
    for (int n = 1; n <= n_max; ++n) {
        budget += base.fixed_point_count(n);
        if (budget > cap)
            throw CapacityExceeded("enumerate_periodic_orbits: orbit count above cap");
    }

    const int k = base.alphabet_size();
    std::vector<PeriodicOrbit> orbits;
    std::vector<int> word;
    for (int n = 1; n <= n_max; ++n) {
        word.assign(size_t(n), 0);
        // DFS over admissible cyclic words of length n
        std::function<void(int)> rec = [&](int pos) {
            if (pos == n) {
                if (!base.admissible(word[size_t(n - 1)], word[0])) return;
                // minimal period check
                for (int d = 1; d < n; ++d) {
                    if (n % d != 0) continue;
                    bool rep = true;
                    for (int i = d; i < n && rep; ++i) rep = (word[size_t(i)] == word[size_t(i - d)]);
                    if (rep) return;
                }
                // keep only the lexicographically smallest rotation
                for (int r = 1; r < n; ++r) {
                    std::vector<int> rot(static_cast<size_t>(n), 0);
                    for (int i = 0; i < n; ++i) rot[size_t(i)] = word[size_t((i + r) % n)];
                    if (rot < word) return;
                }
                orbits.push_back({SymbolicPoint::periodic(word), n});
                return;
            }
            for (int s = 0; s < k; ++s) {
                if (pos > 0 && !base.admissible(word[size_t(pos - 1)], s)) continue;
                word[size_t(pos)] = s;
                rec(pos + 1);
            }
        };
        rec(0);
    }
    return orbits;
}

std::vector<SymbolicPoint> homoclinic_points(const SftBase& base, const SymbolicPoint& q,
                                             int depth) {
    if (q.shifted() != q) throw Error("homoclinic_points: q must be a fixed point");
    const int qs = q.at(0);
    if (depth == 0) return {q};
    const int k = base.alphabet_size();
    const int len = 2 * depth + 1;
    std::vector<SymbolicPoint> out;
    std::vector<int> word(size_t(len), 0);
    std::function<void(int)> rec = [&](int pos) {
        if (pos == len) {
            if (!base.admissible(word[size_t(len - 1)], qs)) return;
            out.push_back(SymbolicPoint({qs}, word, {qs}, -long(depth)));
            return;
        }
        for (int s = 0; s < k; ++s) {
            int prev = (pos == 0) ? qs : word[size_t(pos - 1)];
            if (!base.admissible(prev, s)) continue;
            word[size_t(pos)] = s;
            rec(pos + 1);
        }
    };
    rec(0);
    return out;
}

ClosingResult anosov_closing(const SftBase& base, const SymbolicPoint& x, int n,
                             double threshold) {
    if (n < 1) throw Error("anosov_closing: n must be >= 1");
    SymbolicPoint fnx = x.shifted(n);
    double gap = sft_distance(x, fnx, base);
    if (gap > threshold || x.at(0) != x.at(n))
        throw NotCloseEnough("anosov_closing: dist(x, f^n x) above closing threshold");

    std::vector<int> word = x.window(0, n - 1);
    SymbolicPoint p = SymbolicPoint::periodic(word);

    int minimal = n;
    for (int d = 1; d < n; ++d) {
        if (n % d != 0) continue;
        bool rep = true;
        for (int i = d; i < n && rep; ++i) rep = (word[size_t(i)] == word[size_t(i - d)]);
        if (rep) { minimal = d; break; }
    }

    double bound = 0.0;
    SymbolicPoint xi = x, pi = p;
    for (int i = 0; i <= n; ++i) {
        bound = std::max(bound, sft_distance(xi, pi, base));
        xi = xi.shifted();
        pi = pi.shifted();
    }
    ClosingResult r;
    r.orbit = {p, minimal};
    r.shadowing_bound = bound;
    r.input_gap = gap;
    r.k1 = (gap > 0.0) ? bound / gap : 0.0;
    return r;
}

} // namespace coho
