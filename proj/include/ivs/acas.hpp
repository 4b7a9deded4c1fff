#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ivs/composition.hpp"
#include "ivs/contracts.hpp"
#include "ivs/machine.hpp"

namespace ivs::acas {

struct AcasParams {
    double separation = 150.0;   // minimal safe altitude difference (m)
    double deflection = 0.02;    // elevator deflection magnitude (rad)
    Duration period{1};          // advisory exchange period (s)

    void validate() const;
};

// Longitudinal stability derivatives (per-second units) around a trimmed
// cruise. The shipped sample set is configuration data, not a measured
// aircraft.
struct AircraftParams {
    double Z_alpha = -110.0;
    double Z_q = 0.0;
    double Z_de = -11.0;
    double M_alpha = -2.0;
    double M_q = -1.5;
    double M_de = 2.5;
    double U0 = 220.0;      // trim speed (m/s)
    double theta0 = 0.0;    // trim pitch (rad)
    double gravity = 9.81;  // m/s^2
    double cruise = 220.0;  // speed used in the altitude row (m/s)
};

// An idealized vertical model whose pitch rate is commanded directly:
// theta' = (rate/deflection) * u, h' = cruise * theta. Under advisories the
// pitch rate is exactly 0 or +-rate, so the strict pitch contract holds.
struct KinematicParams {
    double rate = 0.02;     // commanded pitch rate magnitude (rad/s)
    double cruise = 220.0;  // m/s
};

struct AircraftModel {
    enum class Kind { Longitudinal, Kinematic };
    Kind kind = Kind::Longitudinal;
    AircraftParams longitudinal;
    KinematicParams kinematic;
};

// State x = (alpha, q, theta, h): the vertical-plane linearization with the
// altitude row h' = cruise * theta appended; input is the elevator
// deflection, output the altitude.
LinearCds longitudinal_cds(const AircraftParams& p, double initial_altitude);

// State x = (theta, h).
LinearCds kinematic_cds(const KinematicParams& p, double deflection, double initial_altitude);

LinearCds aircraft_cds(const AircraftModel& m, double deflection, double initial_altitude);

// Steady pitch rate of the longitudinal model under a held deflection; the
// reference value for the banded contract reading.
double steady_pitch_rate(const AircraftParams& p, double deflection);

// The advisory logic: three maneuver states with the five-label input
// alphabet. l1 keeps level flight while separated; l2/l3 command descend/
// climb on a conflict; l4/l5 return to level from climb/descend once the
// separation is regained.
LtsSpec advisory_lts(const AcasParams& p, const Label& initial_maneuver = "level");

// Which input label fires for a sampled situation snapshot. Total: every
// snapshot fires a label that is enabled in the current maneuver state. Ties
// between two level aircraft in conflict are broken by altitude, then by
// which aircraft goes first.
Label advisory_guard(const AcasParams& p, const Label& own_maneuver, double own_altitude,
                     const Label& intruder_maneuver, double intruder_altitude, bool goes_first);

// The pilot: maneuvers become elevator deflections (level 0, climb +d,
// descend -d), pairwise on advisory changes.
SectionMorphism pilot_map(const HybridSheafDatum& advisory_datum, double deflection);

// --- scenarios --------------------------------------------------------------------

struct AircraftInit {
    double altitude = 10000.0;
    Label maneuver = "level";
    AircraftModel model;
};

struct ContractSettings {
    Duration settle{5};       // ignore this long after each advisory change
    double rate_band = 0.25;  // relative band around the steady pitch rate
    int grid_density = 4;
    double compare_eps = kCompareEps;  // numeric atom tolerance
};

struct Scenario {
    AcasParams acas;
    AircraftInit craft[2];
    Duration horizon{40};
    Duration step{1, 4};  // sampling grid of the aircraft machines
    ContractSettings contract;

    static Scenario from_json_text(const std::string& text);
    std::string to_json_text() const;
    void validate() const;
};

struct ContractReport {
    std::string name;
    bool holds = false;
    std::string detail;
};

struct ScenarioChecks {
    bool ra_iff_conflict = true;        // advisory != level exactly when separation < delta
    bool deflection_in_range = true;    // deflections only in {-d, 0, +d}
    bool complementarity = true;        // simultaneous fresh advisories disagree
    bool compatible = true;             // every wire of the composite agrees
    std::string detail;
};

struct ScenarioResult {
    DiagramTrace trace;
    ChannelMap channels;  // P1, theta1, q1, h1, defl1, ... and 2-suffixed
    std::vector<ContractReport> contracts;
    ScenarioChecks checks;
    std::vector<Label> advisories[2];  // advisory in force on each period
    Duration period{1};

    bool all_ok() const;
    std::string summary() const;
};

// Builds the closed-loop two-aircraft diagram (advisory logic, pilot and
// airframe per aircraft, cross-wired through sampled altitude/maneuver
// exchange), runs it to the horizon, and evaluates the pitch contract: the
// strict form on kinematic airframes, the sign/band form on longitudinal
// ones.
ScenarioResult run_scenario(const Scenario& sc);

// The per-aircraft open-loop chain (logic -> pilot -> airframe) as a series
// composite, for running against recorded event sections.
ComposedMachine open_chain(const Scenario& sc, int which);

}  // namespace ivs::acas
