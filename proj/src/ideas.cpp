#include "pm/ideas.hpp"

#include "pm/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace pm {

std::string_view to_string(Stratum s) noexcept {
    switch (s) {
        case Stratum::High: return "high";
        case Stratum::Medium: return "medium";
        case Stratum::Low: return "low";
    }
    return "medium";
}

Stratum parse_stratum(std::string_view text) {
    if (text == "high") return Stratum::High;
    if (text == "medium") return Stratum::Medium;
    if (text == "low") return Stratum::Low;
    throw MarketError(ErrorCode::InvalidArgument, "unknown stratum '" + std::string(text) + "'");
}

namespace {

// Splits one CSV record; a quoted field may span lines, so more input is
// pulled from `in` while a quote is open.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string line;
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::string field;
    bool quoted = false;
    for (std::size_t i = 0;; ++i) {
        if (i == line.size()) {
            if (!quoted) break;
            std::string more;
            if (!std::getline(in, more)) throw MarketError(ErrorCode::InvalidArgument, "unterminated quoted CSV field");
            if (!more.empty() && more.back() == '\r') more.pop_back();
            field += '\n';
            line = std::move(more);
            i = static_cast<std::size_t>(-1);
            continue;
        }
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return true;
}

std::string quote_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

}  // namespace

std::vector<IdeaContract> read_ideas_csv(std::istream& in) {
    std::vector<std::string> fields;
    if (!read_record(in, fields)) throw MarketError(ErrorCode::InvalidArgument, "ideas CSV is empty");
    const std::vector<std::string> header{"idea_id", "title", "description", "quality_mean", "stratum"};
    if (fields != header) {
        throw MarketError(ErrorCode::InvalidArgument,
                          "ideas CSV header must be idea_id,title,description,quality_mean,stratum");
    }
    std::vector<IdeaContract> ideas;
    std::set<std::string> seen;
    std::size_t row = 1;
    while (read_record(in, fields)) {
        ++row;
        if (fields.size() == 1 && fields[0].empty()) continue;
        const std::string where = "ideas CSV row " + std::to_string(row);
        if (fields.size() != header.size()) throw MarketError(ErrorCode::InvalidArgument, where + ": expected 5 fields");
        IdeaContract idea;
        idea.idea_id = fields[0];
        idea.title = fields[1];
        idea.description = fields[2];
        const auto& q = fields[3];
        auto [p, ec] = std::from_chars(q.data(), q.data() + q.size(), idea.quality_mean);
        if (ec != std::errc{} || p != q.data() + q.size()) throw MarketError(ErrorCode::InvalidArgument, where + ": bad quality_mean");
        if (!(idea.quality_mean >= 1.0 && idea.quality_mean <= 5.0)) {
            throw MarketError(ErrorCode::InvalidArgument, where + ": quality_mean outside [1,5]");
        }
        idea.stratum = parse_stratum(fields[4]);
        if (idea.idea_id.empty()) throw MarketError(ErrorCode::InvalidArgument, where + ": empty idea_id");
        if (!seen.insert(idea.idea_id).second) {
            throw MarketError(ErrorCode::DuplicateId, "duplicate idea_id '" + idea.idea_id + "'");
        }
        ideas.push_back(std::move(idea));
    }
    return ideas;
}

std::vector<IdeaContract> load_ideas_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MarketError(ErrorCode::Config, "cannot open ideas CSV '" + path + "'");
    return read_ideas_csv(in);
}

void write_ideas_csv(std::ostream& out, std::span<const IdeaContract> ideas) {
    out << "idea_id,title,description,quality_mean,stratum\n";
    char q[32];
    for (const auto& idea : ideas) {
        std::snprintf(q, sizeof q, "%.2f", idea.quality_mean);
        out << quote_field(idea.idea_id) << ',' << quote_field(idea.title) << ',' << quote_field(idea.description)
            << ',' << q << ',' << to_string(idea.stratum) << '\n';
    }
}

std::vector<IdeaContract> synthetic_ideas(std::size_t per_stratum, std::uint64_t seed) {
    struct Band {
        Stratum stratum;
        double lo, hi;
        const char* adjective;
    };
    const Band bands[] = {
        {Stratum::High, 3.6, 4.6, "Strong"},
        {Stratum::Medium, 2.6, 3.5, "Plausible"},
        {Stratum::Low, 1.4, 2.5, "Weak"},
    };
    std::mt19937_64 rng(seed);
    std::vector<IdeaContract> ideas;
    std::size_t counter = 0;
    for (const auto& band : bands) {
        for (std::size_t i = 0; i < per_stratum; ++i) {
            ++counter;
            IdeaContract idea;
            char id[32];
            std::snprintf(id, sizeof id, "idea%02zu", counter);
            idea.idea_id = id;
            idea.title = std::string(band.adjective) + " proposal " + std::to_string(counter);
            idea.description = "Synthetic " + std::string(to_string(band.stratum)) + "-quality idea.";
            // Evenly spaced within the band, jittered, rounded to two decimals.
            const double step = (band.hi - band.lo) / static_cast<double>(per_stratum);
            std::uniform_real_distribution<double> jitter(0.0, step);
            const double raw = band.lo + step * static_cast<double>(i) + jitter(rng);
            idea.quality_mean = std::round(raw * 100.0) / 100.0;
            idea.stratum = band.stratum;
            ideas.push_back(std::move(idea));
        }
    }
    // Shuffle so idea ids do not encode quality order.
    std::vector<std::size_t> order(ideas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<IdeaContract> shuffled;
    shuffled.reserve(ideas.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        IdeaContract idea = ideas[order[i]];
        char id[32];
        std::snprintf(id, sizeof id, "idea%02zu", i + 1);
        idea.idea_id = id;
        shuffled.push_back(std::move(idea));
    }
    return shuffled;
}

GroundTruth::GroundTruth(std::map<std::string, double> quality) : quality_(std::move(quality)) {
    std::vector<std::pair<std::string, double>> order(quality_.begin(), quality_.end());
    // std::map iterates ids ascending, so a stable sort on score keeps the id tie-break.
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    for (std::size_t i = 0; i < order.size(); ++i) placement_[order[i].first] = static_cast<int>(i + 1);
}

GroundTruth GroundTruth::from_ideas(std::span<const IdeaContract> ideas) {
    std::map<std::string, double> quality;
    for (const auto& idea : ideas) {
        if (!quality.emplace(idea.idea_id, idea.quality_mean).second) {
            throw MarketError(ErrorCode::DuplicateId, "duplicate idea_id '" + idea.idea_id + "'");
        }
    }
    return GroundTruth(std::move(quality));
}

std::set<std::string> GroundTruth::top_k(std::size_t k) const {
    std::set<std::string> out;
    for (const auto& [id, place] : placement_) {
        if (static_cast<std::size_t>(place) <= k) out.insert(id);
    }
    return out;
}

}  // namespace pm
