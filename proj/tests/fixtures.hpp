#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "pathlogit/dataset.hpp"
#include "pathlogit/fitting.hpp"
#include "pathlogit/model.hpp"

namespace fixtures {

inline std::filesystem::path source_dir() { return PATHLOGIT_SOURCE_DIR; }
inline std::filesystem::path table1_csv() { return source_dir() / "data" / "table1.csv"; }
inline std::filesystem::path table2_model() { return source_dir() / "models" / "table2_model.json"; }

inline pathlogit::FittedSystem table1_fit() {
    const auto spec = pathlogit::load_system(table2_model());
    return pathlogit::fit_system(pathlogit::load_dataset(table1_csv(), spec), spec);
}

inline pathlogit::SystemSpec spec_from(const char* json) {
    return pathlogit::system_from_json(nlohmann::json::parse(json));
}

/// X -> W -> Y with X -> Y and an X:W interaction; X of the given kind.
inline pathlogit::SystemSpec single_mediator(const std::string& xKind = "continuous", bool withCovariate = false) {
    nlohmann::json doc;
    doc["variables"] = {{{"name", "Y"}, {"role", "outcome"}},
                        {{"name", "W"}, {"role", "mediator"}, {"mediator_index", 1}},
                        {{"name", "X"}, {"role", "treatment"}, {"kind", xKind}}};
    doc["equations"]["Y"] = {"1", "X", "W", "X:W"};
    doc["equations"]["W"] = {"1", "X"};
    if (withCovariate) {
        doc["variables"].push_back({{"name", "C"}, {"role", "covariate"}});
        doc["equations"]["Y"] = {"1", "X", "W", "X:W", "C", "C:W", "C:X"};
        doc["equations"]["W"] = {"1", "X", "C", "C:X"};
    }
    return pathlogit::system_from_json(doc);
}

}  // namespace fixtures
