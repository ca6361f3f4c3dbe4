#include "circamood/matrix.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "circamood/csv.hpp"
#include "circamood/error.hpp"

namespace circamood {

TermFrequencyMatrix::TermFrequencyMatrix(std::string season_label, std::size_t n_days,
                                         std::vector<std::string> stems)
    : season_label_(std::move(season_label)), n_days_(n_days), stems_(std::move(stems)) {
    std::sort(stems_.begin(), stems_.end());
    stems_.erase(std::unique(stems_.begin(), stems_.end()), stems_.end());
    counts_.assign(n_bins() * stems_.size(), 0);
    totals_.assign(n_bins(), 0);
}

std::optional<std::size_t> TermFrequencyMatrix::stem_column(std::string_view stem) const {
    const auto it = std::lower_bound(stems_.begin(), stems_.end(), stem);
    if (it == stems_.end() || *it != stem) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - stems_.begin());
}

void TermFrequencyMatrix::merge(const TermFrequencyMatrix& other) {
    if (other.n_days_ != n_days_ || other.stems_ != stems_) {
        throw UsageError("cannot merge matrices of different shape");
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        counts_[i] += other.counts_[i];
    }
    for (std::size_t i = 0; i < totals_.size(); ++i) {
        totals_[i] += other.totals_[i];
    }
}

TermFrequencyMatrix TermFrequencyMatrix::scaled(std::uint64_t factor) const {
    TermFrequencyMatrix out = *this;
    for (auto& c : out.counts_) {
        c *= factor;
    }
    for (auto& t : out.totals_) {
        t *= factor;
    }
    return out;
}

void TermFrequencyMatrix::validate() const {
    for (std::size_t b = 0; b < n_bins(); ++b) {
        for (std::size_t s = 0; s < stems_.size(); ++s) {
            if (count(b, s) > total(b)) {
                throw DataError("count of '" + stems_[s] + "' exceeds bin total at bin " + std::to_string(b));
            }
        }
    }
}

void write_matrix(std::ostream& out, const TermFrequencyMatrix& m, std::uint64_t seed) {
    out << csv::provenance_line(seed) << '\n';
    out << "# season=" << m.season_label() << " n_days=" << m.n_days() << '\n';
    out << "day_index,hour,total";
    for (const auto& s : m.stems()) {
        out << ',' << s;
    }
    out << '\n';
    for (std::size_t b = 0; b < m.n_bins(); ++b) {
        out << b / kHoursPerDay << ',' << b % kHoursPerDay << ',' << m.total(b);
        for (std::size_t s = 0; s < m.stems().size(); ++s) {
            out << ',' << m.count(b, s);
        }
        out << '\n';
    }
}

TermFrequencyMatrix read_matrix(std::istream& in) {
    std::string line;
    std::string season;
    std::optional<std::size_t> n_days;
    // Shape lives in a comment line ahead of the header row.
    while (std::getline(in, line)) {
        const auto t = csv::trim(line);
        if (t.empty()) {
            continue;
        }
        if (t.front() != '#') {
            break;
        }
        std::istringstream fields{std::string(t.substr(1))};
        std::string kv;
        while (fields >> kv) {
            if (kv.rfind("season=", 0) == 0) {
                season = kv.substr(7);
            } else if (kv.rfind("n_days=", 0) == 0) {
                if (auto v = csv::parse_uint(kv.substr(7))) {
                    n_days = static_cast<std::size_t>(*v);
                }
            }
        }
    }
    if (season.empty() || !n_days) {
        throw DataError("matrix file lacks its season/n_days line");
    }
    const auto header = csv::split_line(line);
    if (header.size() < 3 || header[0] != "day_index" || header[1] != "hour" || header[2] != "total") {
        throw DataError("matrix file has an unexpected header");
    }
    std::vector<std::string> stems(header.begin() + 3, header.end());
    if (!std::is_sorted(stems.begin(), stems.end()) ||
        std::adjacent_find(stems.begin(), stems.end()) != stems.end()) {
        throw DataError("matrix stems must be sorted and unique");
    }
    TermFrequencyMatrix m(season, *n_days, stems);
    std::vector<bool> seen(m.n_bins(), false);
    while (csv::next_data_line(in, line)) {
        const auto f = csv::split_line(line);
        if (f.size() != header.size()) {
            throw DataError("matrix row has " + std::to_string(f.size()) + " fields, expected " +
                            std::to_string(header.size()));
        }
        const auto day = csv::parse_uint(f[0]);
        const auto hour = csv::parse_uint(f[1]);
        const auto total = csv::parse_uint(f[2]);
        if (!day || !hour || !total || *day >= *n_days || *hour >= kHoursPerDay) {
            throw DataError("bad matrix row: " + line);
        }
        const std::size_t bin = static_cast<std::size_t>(*day) * kHoursPerDay + static_cast<std::size_t>(*hour);
        if (seen[bin]) {
            throw DataError("duplicate matrix row: " + line);
        }
        seen[bin] = true;
        m.add_total(bin, *total);
        for (std::size_t s = 0; s < stems.size(); ++s) {
            const auto c = csv::parse_uint(f[3 + s]);
            if (!c) {
                throw DataError("bad count in matrix row: " + line);
            }
            m.add_count(bin, s, *c);
        }
    }
    m.validate();
    return m;
}

}  // namespace circamood
