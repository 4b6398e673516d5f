#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "wakesteer/campaign.hpp"

namespace py = pybind11;
using namespace wakesteer;

PYBIND11_MODULE(pywakesteer, m) {
    m.doc() = "Yaw-based wake steering with GP-corrected surrogate models";

    py::class_<Turbine>(m, "Turbine")
        .def(py::init<>())
        .def_readwrite("x", &Turbine::x)
        .def_readwrite("y", &Turbine::y)
        .def_readwrite("rotor_diameter", &Turbine::rotor_diameter)
        .def_readwrite("hub_height", &Turbine::hub_height)
        .def_readwrite("cp_max", &Turbine::cp_max)
        .def_readwrite("rated_power", &Turbine::rated_power);

    py::class_<Ambient>(m, "Ambient")
        .def(py::init<>())
        .def_readwrite("wind_speed", &Ambient::wind_speed)
        .def_readwrite("turbulence_intensity", &Ambient::turbulence_intensity)
        .def_readwrite("wind_direction", &Ambient::wind_direction)
        .def_readwrite("air_density", &Ambient::air_density);

    py::class_<WakeParams>(m, "WakeParams")
        .def(py::init<>())
        .def_readwrite("ka", &WakeParams::ka)
        .def_readwrite("kb", &WakeParams::kb)
        .def_readwrite("yaw_power_exponent", &WakeParams::yaw_power_exponent)
        .def_readwrite("deflection_gain", &WakeParams::deflection_gain)
        .def_readwrite("skew_slope", &WakeParams::skew_slope);

    py::class_<FarmLayout>(m, "FarmLayout")
        .def(py::init<>())
        .def("size", &FarmLayout::size)
        .def_readwrite("name", &FarmLayout::name);

    m.def("make_grid_layout", &make_grid_layout, py::arg("rows"), py::arg("cols"),
          py::arg("spacing_downstream_d"), py::arg("spacing_cross_d"),
          py::arg("prototype"), py::arg("name") = "grid");

    m.def(
        "farm_power",
        [](const FarmLayout& layout, const Ambient& ambient,
           const Eigen::VectorXd& yaw, const WakeParams& params) {
            const FarmPower p = farm_power(layout, ambient, yaw, params);
            return py::make_tuple(p.per_turbine, p.total);
        },
        py::arg("layout"), py::arg("ambient"), py::arg("yaw"), py::arg("params"),
        "per-turbine and total power (W)");

    m.def("wake_deflection", &wake_deflection, py::arg("yaw_deg"), py::arg("ct"),
          py::arg("x"), py::arg("params"), py::arg("turbine"), py::arg("ti_local"));
    m.def("wake_deficit", &wake_deficit, py::arg("x"), py::arg("y_off"),
          py::arg("z_off"), py::arg("yaw_deg"), py::arg("ct"), py::arg("params"),
          py::arg("turbine"), py::arg("ti_local"));

    py::class_<CampaignConfig>(m, "CampaignConfig")
        .def_static("defaults", &CampaignConfig::defaults)
        .def_static("parse", &CampaignConfig::parse)
        .def("serialize", &CampaignConfig::serialize)
        .def_readwrite("name", &CampaignConfig::name)
        .def_readwrite("seed", &CampaignConfig::seed)
        .def_readwrite("iterations", &CampaignConfig::iterations)
        .def_readwrite("scheme", &CampaignConfig::scheme)
        .def_readwrite("output_dir", &CampaignConfig::output_dir)
        .def_readwrite("oracle_in_summary", &CampaignConfig::oracle_in_summary);

    py::class_<IterationRecord>(m, "IterationRecord")
        .def_readonly("iteration", &IterationRecord::iteration)
        .def_readonly("yaw_applied", &IterationRecord::yaw_applied)
        .def_readonly("total_norm", &IterationRecord::total_norm);

    py::class_<CampaignState>(m, "CampaignState")
        .def_readonly("records", &CampaignState::records)
        .def_readonly("current_yaw", &CampaignState::current_yaw)
        .def_readonly("completed_iterations", &CampaignState::completed_iterations)
        .def("summary",
             [](const CampaignState& s) {
                 return campaign_summary(s, std::nullopt).dump();
             });

    py::class_<OracleResult>(m, "OracleResult")
        .def_readonly("yaw", &OracleResult::yaw)
        .def_readonly("row_yaw", &OracleResult::row_yaw)
        .def_readonly("total_power", &OracleResult::total_power)
        .def_readonly("greedy_power", &OracleResult::greedy_power)
        .def_readonly("gain", &OracleResult::gain);

    m.def("run_campaign", &run_campaign, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("resume_campaign", &resume_campaign, py::arg("state_path"),
          py::call_guard<py::gil_scoped_release>());
    m.def("plant_oracle", &plant_oracle, py::arg("config"),
          py::arg("resolution_deg") = 1.0,
          py::call_guard<py::gil_scoped_release>());
    m.def("export_row_slice", &export_row_slice, py::arg("state"), py::arg("row"),
          py::arg("gamma_min"), py::arg("gamma_max"), py::arg("points"));
}
