#ifndef CAUSAL_IDENTIFICATION_HPP
#define CAUSAL_IDENTIFICATION_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "causal/graph.hpp"

namespace causal {

struct EstimandSpec {
    std::string treatment;
    std::string outcome;
    std::vector<std::pair<double, double>> contrasts; // (t, t_ref)
    std::vector<std::string> adjustment;              // C
    std::vector<std::string> precision;               // R
    std::string provenance;                           // "graph" or "user"
};

void validate_estimand(const EstimandSpec& spec);

enum class StepKind { Forward, Backward, Bidirected };

struct BackdoorPath {
    std::vector<std::string> nodes;   // starts at treatment, ends at outcome
    std::vector<StepKind> steps;      // one per consecutive node pair
    std::vector<std::string> colliders;
};

std::string render_path(const BackdoorPath& p);

// every treatment-outcome path whose first edge points into the treatment
std::vector<BackdoorPath> backdoor_paths(const CausalGraph& g, const std::string& treatment,
                                         const std::string& outcome);

bool is_backdoor_set(const CausalGraph& g, const std::string& treatment, const std::string& outcome,
                     const std::vector<std::string>& z);

// smallest valid set, ties broken lexicographically
std::optional<std::vector<std::string>> find_backdoor_set(const CausalGraph& g, const std::string& treatment,
                                                          const std::string& outcome);

struct RoleReport {
    std::map<std::string, std::string> roles; // every node except treatment/outcome
    std::vector<BackdoorPath> open_backdoor_paths; // open given the empty set
    std::vector<std::string> chosen_adjustment;
    bool identifiable = true;
};

RoleReport classify_variables(const CausalGraph& g, const std::string& treatment, const std::string& outcome);

struct PlausibleSubgraph {
    CausalGraph graph;
    std::vector<std::pair<std::string, std::string>> removed; // bidirected edges dropped
    double ratio;                                             // subgraph vs. input plausibility
    std::vector<std::string> adjustment;                      // backdoor set valid in the subgraph
};

// highest-plausibility bidirected-edge removal that restores backdoor
// identifiability; removing everything always succeeds
PlausibleSubgraph most_plausible_backdoor_subgraph(const CausalGraph& g, const std::string& treatment,
                                                   const std::string& outcome);

std::string render_estimand(const EstimandSpec& spec);

} // namespace causal

#endif // CAUSAL_IDENTIFICATION_HPP
