#pragma once

// Published results: Table 1 fit and decompositions, and the simulation study summary.

#include <array>
#include <string>
#include <vector>

namespace published {

struct Coefficient {
    const char* eq;
    const char* term;
    double est;
    double se;
};

inline const std::vector<Coefficient>& table2() {
    static const std::vector<Coefficient> rows{
        {"Y", "1", -1.6186, 0.3857},      {"Y", "X[2]", 1.9345, 0.3676},   {"Y", "X[3]", 1.1329, 0.3865},
        {"Y", "C", 0.4597, 0.3540},       {"Y", "W", 4.3290, 1.5427},      {"Y", "X[2]:W", -3.7077, 1.4725},
        {"Y", "X[3]:W", -2.2708, 1.3365}, {"Y", "C:W", -2.4770, 0.9255},   {"W", "1", -3.3557, 0.5873},
        {"W", "X[2]", 1.3145, 0.6767},    {"W", "X[3]", 3.1326, 0.6245},
    };
    return rows;
}

struct Row {
    std::string effect;
    std::string contrast;
    std::string covariates;
    double est, se, ciLow, ciHigh, p;
};

inline const std::vector<Row>& table3() {
    static const std::vector<Row> rows{
        {"DE", "{2,1}", "C=0", 1.934, 0.368, 1.214, 2.655, 0.000},
        {"IE", "{2,1}", "C=0", 0.364, 0.192, -0.011, 0.740, 0.057},
        {"RES", "{2,1}", "C=0", -0.476, 0.197, -0.862, -0.089, 0.016},
        {"TE", "{2,1}", "C=0", 1.822, 0.348, 1.141, 2.506, 0.000},
        {"DE", "{2,1}", "C=1", 1.934, 0.368, 1.214, 2.655, 0.000},
        {"IE", "{2,1}", "C=1", 0.176, 0.139, -0.096, 0.449, 0.205},
        {"RES", "{2,1}", "C=1", -0.475, 0.227, -0.919, -0.031, 0.036},
        {"TE", "{2,1}", "C=1", 1.635, 0.341, 0.968, 2.303, 0.000},
        {"DE", "{3,1}", "C=0", 1.133, 0.386, 0.375, 1.890, 0.003},
        {"IE", "{3,1}", "C=0", 1.475, 0.316, 0.856, 2.094, 0.000},
        {"RES", "{3,1}", "C=0", -0.846, 0.300, -1.435, -0.257, 0.005},
        {"TE", "{3,1}", "C=0", 1.762, 0.369, 1.038, 2.486, 0.000},
        {"DE", "{3,1}", "C=1", 1.133, 0.386, 0.375, 1.890, 0.003},
        {"IE", "{3,1}", "C=1", 0.795, 0.477, -0.141, 1.731, 0.096},
        {"RES", "{3,1}", "C=1", -1.057, 0.567, -2.168, 0.054, 0.062},
        {"TE", "{3,1}", "C=1", 0.871, 0.340, 0.205, 1.538, 0.010},
    };
    return rows;
}

inline const std::vector<Row>& table5() {
    static const std::vector<Row> rows{
        {"DPE", "{2,1}", "C=0", 0.413, 0.069, 0.279, 0.547, 0.000},
        {"IPE", "{2,1}", "C=0", 0.063, 0.031, 0.001, 0.124, 0.046},
        {"RPE", "{2,1}", "C=0", -0.073, 0.032, -0.135, -0.010, 0.023},
        {"TPE", "{2,1}", "C=0", 0.403, 0.068, 0.269, 0.537, 0.000},
        {"DPE", "{2,1}", "C=1", 0.446, 0.074, 0.301, 0.591, 0.000},
        {"IPE", "{2,1}", "C=1", 0.035, 0.028, -0.020, 0.090, 0.215},
        {"RPE", "{2,1}", "C=1", -0.099, 0.047, -0.190, -0.008, 0.034},
        {"TPE", "{2,1}", "C=1", 0.382, 0.072, 0.240, 0.523, 0.000},
        {"DPE", "{3,1}", "C=0", 0.216, 0.067, 0.084, 0.347, 0.001},
        {"IPE", "{3,1}", "C=0", 0.317, 0.078, 0.164, 0.470, 0.000},
        {"RPE", "{3,1}", "C=0", -0.144, 0.074, -0.289, 0.000, 0.049},
        {"TPE", "{3,1}", "C=0", 0.388, 0.091, 0.210, 0.566, 0.000},
        {"DPE", "{3,1}", "C=1", 0.255, 0.082, 0.094, 0.415, 0.002},
        {"IPE", "{3,1}", "C=1", 0.176, 0.119, -0.058, 0.410, 0.141},
        {"RPE", "{3,1}", "C=1", -0.236, 0.154, -0.539, 0.067, 0.127},
        {"TPE", "{3,1}", "C=1", 0.194, 0.098, 0.003, 0.386, 0.046},
    };
    return rows;
}

// One method in one (treatment, beta_x) row; arrays run over n = 250, 500, 1000.
struct StudyRow {
    std::string treatment;
    double betaX;
    double truth;
    std::string method;
    std::array<double, 3> average, variance, rmse;
};

inline const std::array<int, 3> kStudySizes{250, 500, 1000};

inline const std::vector<StudyRow>& table4() {
    static const std::vector<StudyRow> rows{
        {"binary", 0.4, 0.716, "KHB", {.732, .683, .669}, {.144, .033, .014}, {.379, .184, .129}},
        {"binary", 0.4, 0.716, "RSD", {.757, .732, .724}, {.064, .024, .011}, {.256, .154, .107}},
        {"binary", 0.9, 0.532, "KHB", {.475, .468, .462}, {.020, .008, .004}, {.153, .111, .092}},
        {"binary", 0.9, 0.532, "RSD", {.544, .539, .535}, {.020, .009, .004}, {.141, .094, .064}},
        {"binary", 1.8, 0.364, "KHB", {.301, .300, .297}, {.004, .002, .001}, {.092, .079, .074}},
        {"binary", 1.8, 0.364, "RSD", {.367, .367, .364}, {.007, .003, .002}, {.082, .058, .040}},
        {"continuous", 0.4, 0.590, "KHB", {.531, .521, .513}, {.028, .013, .006}, {.178, .133, .108}},
        {"continuous", 0.4, 0.590, "RSD", {.561, .589, .580}, {.010, .004, .002}, {.103, .064, .042}},
        {"continuous", 0.9, 0.437, "KHB", {.316, .317, .310}, {.008, .004, .002}, {.149, .135, .134}},
        {"continuous", 0.9, 0.437, "RSD", {.411, .458, .440}, {.002, .002, .001}, {.055, .046, .026}},
        {"continuous", 1.8, 0.351, "KHB", {.180, .178, .180}, {.002, .001, .001}, {.178, .177, .173}},
        {"continuous", 1.8, 0.351, "RSD", {.328, .343, .352}, {.001, .001, .000}, {.042, .026, .017}},
    };
    return rows;
}

}  // namespace published
