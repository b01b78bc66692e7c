#ifndef CAUSAL_DATASET_HPP
#define CAUSAL_DATASET_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace causal {

enum class ColumnKind { Continuous, Binary, Categorical, Ordinal };

struct ColumnType {
    ColumnKind kind = ColumnKind::Continuous;
    int levels = 0; // 2 for binary, k for categorical/ordinal, 0 for continuous

    bool discrete() const { return kind != ColumnKind::Continuous; }
};

struct RescaleBounds {
    double lo;
    double hi;
};

// Rectangular numeric table. Missing cells are NaN in values and 0 in the
// observed mask; the mask is authoritative.
struct Dataset {
    std::vector<std::string> names;
    std::vector<ColumnType> types;
    Eigen::MatrixXd values;
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> observed;
    // populated by rescale_column, keyed by column name
    std::map<std::string, RescaleBounds> rescaled;

    Eigen::Index n_rows() const { return values.rows(); }
    Eigen::Index n_cols() const { return values.cols(); }
    int column_index(const std::string& name) const; // throws on unknown name
    bool has_column(const std::string& name) const;
    Eigen::VectorXd column(const std::string& name) const;
    const ColumnType& type_of(const std::string& name) const;
    Eigen::Index missing_count(const std::string& name) const;
    bool any_missing() const;
    // distinct observed treatment levels must be 0..k-1; returns k
    int level_count(const std::string& name) const;

    void validate() const; // type/value invariants, throws with row and column
};

// Schema entries; columns absent from the map are auto-inferred.
struct SchemaEntry {
    bool is_auto = true;
    ColumnType type;
};
using Schema = std::map<std::string, SchemaEntry>;

Schema parse_schema(const std::string& text);
Schema load_schema(const std::string& path);

Dataset load_csv(const std::string& path, const Schema& schema = {});
Dataset parse_csv(const std::string& text, const Schema& schema = {});
void save_csv(const Dataset& ds, const std::string& path);
std::string write_csv(const Dataset& ds);

// maps a continuous column onto [0, 1]; records bounds for unscaling
Dataset rescale_column(const Dataset& ds, const std::string& name);
double unscale_effect(const RescaleBounds& b, double scaled_delta);

// appends binary Q_<col> (1 = observed) and imputes the column's gaps
Dataset make_censoring(const Dataset& ds, const std::string& name);

Dataset take_rows(const Dataset& ds, const std::vector<Eigen::Index>& rows);

} // namespace causal

#endif // CAUSAL_DATASET_HPP
