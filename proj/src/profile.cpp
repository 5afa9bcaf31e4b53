#include "editdiff/profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "editdiff/error.hpp"

namespace editdiff {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

std::vector<double> dirichlet(int k, double alpha, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(k));
    double total = 0.0;
    do {
        total = 0.0;
        for (double& x : v) {
            x = rng.gamma(alpha);
            total += x;
        }
    } while (!(total > 0.0));
    for (double& x : v) x /= total;
    return v;
}

double emission(const std::vector<double>& row, Token tok) {
    if (tok < 0 || static_cast<std::size_t>(tok) >= row.size()) return 0.0;
    return row[static_cast<std::size_t>(tok)];
}

}  // namespace

void ProfileHyper::validate() const {
    if (residues < 2) throw Error("profile needs at least two residues");
    if (core_fraction < 0.0 || core_fraction > 1.0) throw Error("core_fraction must lie in [0, 1]");
    if (core_mass < 0.95 || core_mass > 1.0) throw Error("core_mass must lie in [0.95, 1]");
    if (concentration <= 0.0 || background_concentration <= 0.0) throw Error("concentrations must be positive");
    if (mean_del < 0.0 || mean_del > 0.15 || mean_ins < 0.0 || mean_ins > 0.15) {
        throw Error("mean indel rates must lie in [0, 0.15]");
    }
}

bool ProfileModel::is_core(std::size_t i) const { return std::binary_search(core.begin(), core.end(), i); }

Token ProfileModel::modal(std::size_t i) const {
    const auto& row = emissions.at(i);
    return static_cast<Token>(std::max_element(row.begin(), row.end()) - row.begin());
}

void ProfileModel::validate() const {
    const std::size_t l = length();
    if (p_del.size() != l || p_ins.size() != l) throw Error("profile rate vectors do not match its length");
    auto check_row = [&](const std::vector<double>& row) {
        if (row.size() != static_cast<std::size_t>(residues)) throw Error("profile emission row has wrong size");
        double s = 0.0;
        for (double p : row) {
            if (p < 0.0) throw Error("negative profile probability");
            s += p;
        }
        if (std::abs(s - 1.0) > 1e-9) throw Error("profile emission row is not normalized");
    };
    for (const auto& row : emissions) check_row(row);
    check_row(background);
    for (std::size_t i = 0; i < l; ++i) {
        if (p_del[i] < 0.0 || p_del[i] > 0.3 || p_ins[i] < 0.0 || p_ins[i] > 0.3) {
            throw Error("profile indel rates must lie in [0, 0.3]");
        }
    }
    for (std::size_t i : core) {
        if (i >= l) throw Error("core position outside the profile");
        if (emissions[i][static_cast<std::size_t>(modal(i))] < 0.95) throw Error("core position is not conserved");
    }
}

ProfileModel sample_profile(std::size_t l_ref, const ProfileHyper& hyper, Rng& rng) {
    if (l_ref < 10) throw Error("profile length must be at least 10");
    hyper.validate();
    ProfileModel p;
    p.residues = hyper.residues;
    const auto k = static_cast<std::size_t>(hyper.residues);

    std::vector<std::size_t> order(l_ref);
    for (std::size_t i = 0; i < l_ref; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng.engine());
    const auto n_core = static_cast<std::size_t>(std::llround(hyper.core_fraction * static_cast<double>(l_ref)));
    p.core.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_core));
    std::sort(p.core.begin(), p.core.end());

    p.emissions.resize(l_ref);
    p.p_del.resize(l_ref);
    p.p_ins.resize(l_ref);
    for (std::size_t i = 0; i < l_ref; ++i) {
        if (p.is_core(i)) {
            const std::size_t m = rng.index(k);
            p.emissions[i].assign(k, (1.0 - hyper.core_mass) / static_cast<double>(k - 1));
            p.emissions[i][m] = hyper.core_mass;
        } else {
            p.emissions[i] = dirichlet(hyper.residues, hyper.concentration, rng);
        }
        p.p_del[i] = 2.0 * hyper.mean_del * rng.uniform();
        p.p_ins[i] = 2.0 * hyper.mean_ins * rng.uniform();
    }
    p.background = dirichlet(hyper.residues, hyper.background_concentration, rng);
    return p;
}

ProfileDraw sample_with_path(const ProfileModel& profile, Rng& rng) {
    constexpr int kMaxAttempts = 100;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        ProfileDraw d;
        d.path.match.assign(profile.length(), -1);
        d.path.inserted.assign(profile.length(), 0);
        for (std::size_t i = 0; i < profile.length(); ++i) {
            if (rng.bernoulli(profile.p_del[i])) continue;
            d.path.match[i] = static_cast<int>(d.sequence.size());
            d.sequence.tokens.push_back(static_cast<Token>(rng.categorical(profile.emissions[i])));
            while (rng.bernoulli(profile.p_ins[i])) {
                d.sequence.tokens.push_back(static_cast<Token>(rng.categorical(profile.background)));
                ++d.path.inserted[i];
            }
        }
        if (!d.sequence.empty()) return d;
    }
    throw Error("profile produced only empty sequences");
}

ObservedSequence sample_sequence(const ProfileModel& profile, Rng& rng) {
    return sample_with_path(profile, rng).sequence;
}

double path_loglik(const ProfileModel& profile, const ObservedSequence& seq, const ProfilePath& path) {
    if (path.match.size() != profile.length() || path.inserted.size() != profile.length()) {
        throw Error("path does not match the profile length");
    }
    double ll = 0.0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < profile.length(); ++i) {
        if (path.match[i] < 0) {
            if (path.inserted[i] != 0) throw Error("insertions may only follow an emitted position");
            ll += safe_log(profile.p_del[i]);
            continue;
        }
        if (static_cast<std::size_t>(path.match[i]) != j || j >= seq.size()) throw Error("path is inconsistent with the sequence");
        ll += safe_log(1.0 - profile.p_del[i]) + safe_log(emission(profile.emissions[i], seq[j]));
        ++j;
        for (int r = 0; r < path.inserted[i]; ++r, ++j) {
            if (j >= seq.size()) throw Error("path is inconsistent with the sequence");
            ll += safe_log(profile.p_ins[i]) + safe_log(emission(profile.background, seq[j]));
        }
        ll += safe_log(1.0 - profile.p_ins[i]);
    }
    if (j != seq.size()) throw Error("path does not consume the whole sequence");
    return ll;
}

ProfileAlignment align_to_profile(const ProfileModel& profile, const ObservedSequence& seq) {
    const std::size_t l = profile.length();
    const std::size_t n = seq.size();
    const std::size_t w = n + 1;
    // E: position i finished (insertion run closed); H: position i emitted, run still open.
    std::vector<double> e((l + 1) * w, kNegInf), h((l + 1) * w, kNegInf);
    std::vector<std::uint8_t> e_from_h((l + 1) * w, 0), h_from_ins((l + 1) * w, 0);
    e[0] = 0.0;
    std::vector<double> bg(n);
    for (std::size_t j = 0; j < n; ++j) bg[j] = safe_log(emission(profile.background, seq[j]));

    for (std::size_t i = 1; i <= l; ++i) {
        const double ldel = safe_log(profile.p_del[i - 1]);
        const double lkeep = safe_log(1.0 - profile.p_del[i - 1]);
        const double lins = safe_log(profile.p_ins[i - 1]);
        const double lstop = safe_log(1.0 - profile.p_ins[i - 1]);
        const auto& row = profile.emissions[i - 1];
        for (std::size_t j = 0; j <= n; ++j) {
            const std::size_t c = i * w + j;
            if (j > 0) {
                const double from_match = e[(i - 1) * w + j - 1] + lkeep + safe_log(emission(row, seq[j - 1]));
                const double from_ins = h[c - 1] + lins + bg[j - 1];
                if (from_ins > from_match) {
                    h[c] = from_ins;
                    h_from_ins[c] = 1;
                } else {
                    h[c] = from_match;
                }
            }
            const double via_del = e[(i - 1) * w + j] + ldel;
            const double via_h = h[c] + lstop;
            if (via_h >= via_del && via_h > kNegInf) {
                e[c] = via_h;
                e_from_h[c] = 1;
            } else {
                e[c] = via_del;
            }
        }
    }

    ProfileAlignment out;
    out.loglik = e[l * w + n];
    out.path.match.assign(l, -1);
    out.path.inserted.assign(l, 0);
    if (out.loglik == kNegInf) return out;
    std::size_t j = n;
    for (std::size_t i = l; i >= 1; --i) {
        if (!e_from_h[i * w + j]) continue;  // deleted; j unchanged
        while (h_from_ins[i * w + j]) {
            ++out.path.inserted[i - 1];
            --j;
        }
        --j;
        out.path.match[i - 1] = static_cast<int>(j);
    }
    return out;
}

double loglik(const ProfileModel& profile, const ObservedSequence& seq) {
    return align_to_profile(profile, seq).loglik;
}

double expected_length(const ProfileModel& profile) {
    double total = 0.0;
    for (std::size_t i = 0; i < profile.length(); ++i) {
        total += (1.0 - profile.p_del[i]) * (1.0 + profile.p_ins[i] / (1.0 - profile.p_ins[i]));
    }
    return total;
}

std::vector<double> expected_unigram(const ProfileModel& profile) {
    const auto k = static_cast<std::size_t>(profile.residues);
    std::vector<double> freq(k, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < profile.length(); ++i) {
        const double emit = 1.0 - profile.p_del[i];
        const double runs = emit * profile.p_ins[i] / (1.0 - profile.p_ins[i]);
        for (std::size_t a = 0; a < k; ++a) freq[a] += emit * profile.emissions[i][a] + runs * profile.background[a];
        total += emit + runs;
    }
    for (double& f : freq) f /= total;
    return freq;
}

}  // namespace editdiff
