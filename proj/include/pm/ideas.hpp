#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pm {

enum class Stratum { High, Medium, Low };

std::string_view to_string(Stratum s) noexcept;
Stratum parse_stratum(std::string_view text);

struct IdeaContract {
    std::string idea_id;
    std::string title;
    std::string description;
    double quality_mean = 0.0;  // mean expert rating on the 1..5 scale
    Stratum stratum = Stratum::Medium;
};

/// Reads `idea_id,title,description,quality_mean,stratum` (header required,
/// RFC 4180 quoting). Rejects duplicate ids and quality outside [1, 5].
std::vector<IdeaContract> read_ideas_csv(std::istream& in);
std::vector<IdeaContract> load_ideas_csv(const std::string& path);
void write_ideas_csv(std::ostream& out, std::span<const IdeaContract> ideas);

/// Deterministic stand-in corpus: `per_stratum` ideas in each of the three
/// strata, qualities spread over high [3.6, 4.6], medium [2.6, 3.5], low [1.4, 2.5].
std::vector<IdeaContract> synthetic_ideas(std::size_t per_stratum = 8, std::uint64_t seed = 2010);

/// Expert quality ranking. Placement 1 is the best idea; equal scores are
/// ordered by ascending idea_id.
class GroundTruth {
public:
    explicit GroundTruth(std::map<std::string, double> quality);
    static GroundTruth from_ideas(std::span<const IdeaContract> ideas);

    const std::map<std::string, double>& quality() const noexcept { return quality_; }
    const std::map<std::string, int>& placement() const noexcept { return placement_; }
    /// Ideas with placement <= k.
    std::set<std::string> top_k(std::size_t k) const;
    std::size_t size() const noexcept { return quality_.size(); }

private:
    std::map<std::string, double> quality_;
    std::map<std::string, int> placement_;
};

}  // namespace pm
