#pragma once

// Course definitions, validation and run scoring.
//
// A course is a JSON document (format 1). Lengths are metres except the
// body diameter (cm); pressures kPa; angles degrees in the file and radians
// in memory. Each loaded course keeps the fully resolved document it was
// built from; its hash identifies the course in run logs.

#include "vinesim/body.hpp"
#include "vinesim/growth.hpp"
#include "vinesim/input.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vinesim {

inline constexpr int kCourseFormat = 1;

struct RobotConfig {
    double inflated_diameter = 7.0;  ///< cm
    double body_length = 10.0;       ///< m
    double l_ctrl = 1.0;             ///< m
    double joystick_length = 1.0;    ///< m, arc length the joystick bend is read at
    double kappa_retract = 0.2;      ///< 1/m
    ActuatorLayout layout = ActuatorLayout::equally_spaced(0.01, 14.0);
    GrowthConfig growth;

    double p_max() const { return layout.p_max; }
    BodyConfig body_config() const;
};

struct Location {
    std::string name;
    Pose3 start;  ///< local +z is the growth direction
};

enum class Passage { TipOnly, WholeBody };

struct RubricItem {
    std::string id;
    std::string goal;      ///< Goal obstacle that marks completion
    std::string location;  ///< empty: scored at every location
    double points = 100.0;
    bool whole_body_required = true;
    std::string aperture;                ///< ApertureWall id; enables the size bonus
    double aperture_bonus = 0.0;         ///< points at hole/diameter = 0
    std::vector<std::string> cylinders;  ///< any topple zeroes the item
};

struct ScoringRubric {
    std::vector<RubricItem> items;
    double tip_only_multiplier = 0.5;
    Passage passage = Passage::TipOnly;
    double time_limit = 900.0;  ///< s
};

struct Course {
    std::string name;
    RobotConfig robot;
    Environment environment;
    std::vector<Location> locations;  ///< never empty after load
    ScoringRubric rubric;
    nlohmann::json meta = nlohmann::json::object();
    nlohmann::json document;  ///< resolved source document

    const Pose3& start_pose(std::size_t location = 0) const;
    std::size_t location_index(const std::string& name) const;
};

/// Parses and validates a course document. `defaults` is merged underneath
/// the document (document values win). Schema problems raise ParseError
/// naming the JSON pointer; invariant violations raise ValidationError.
Course load_course(const nlohmann::json& doc, const nlohmann::json& defaults = nlohmann::json::object());
Course load_course_text(const std::string& text, const nlohmann::json& defaults = nlohmann::json::object());
Course load_course_file(const std::string& path, const nlohmann::json& defaults = nlohmann::json::object());

/// Regenerates a document from the in-memory course.
nlohmann::json serialize_course(const Course& course);

/// Hash of the resolved document (or of serialize_course() when the course
/// was built in code).
std::uint64_t course_hash(const Course& course);

/// Names of the built-in courses.
std::vector<std::string> builtin_course_names();
/// Throws InvalidInput for unknown names.
nlohmann::json builtin_course_document(const std::string& name);
Course builtin_course(const std::string& name, const nlohmann::json& defaults = nlohmann::json::object());

/// Defaults file named by VINESIM_CONFIG, or an empty object.
nlohmann::json env_defaults();

enum class Severity { Warning, Error };

struct Finding {
    Severity severity = Severity::Warning;
    std::string path;
    std::string message;
};

std::vector<Finding> validate_course(const Course& course);

struct RunEntry {
    std::uint64_t tick = 0;
    TeleopInput input;
    bool estop_clear = false;
    bool disconnect = false;
    std::uint64_t state_hash = 0;
    std::vector<Event> events;
};

struct RunRecord {
    std::uint64_t course_hash = 0;
    int format = kCourseFormat;
    double tick_hz = 50.0;
    std::string location;
    nlohmann::json course;  ///< embedded course document
    std::vector<RunEntry> entries;
    std::optional<double> wall_duration;  ///< s
    std::optional<double> final_score;
};

struct ItemScore {
    std::string id;
    double possible = 0.0;
    double awarded = 0.0;
    bool reached = false;
    double multiplier = 1.0;
    double bonus = 0.0;
    std::string note;
};

struct ScoreBreakdown {
    std::vector<ItemScore> items;
    double total = 0.0;
    double possible = 0.0;
    double duration = 0.0;  ///< simulated s
};

/// Throws ValidationError when the record was not produced on `course`.
ScoreBreakdown score_run(const RunRecord& record, const Course& course);

nlohmann::json to_json(const ScoreBreakdown& s);
nlohmann::json to_json(const Finding& f);

/// Pose helpers matching the file convention: yaw about +z, then pitch
/// (nose up positive), then roll; a robot or aperture pose grows/faces along
/// its file-frame +x.
Eigen::Quaterniond rotation_from_degrees(double yaw, double pitch, double roll);
Pose3 heading_pose(const Vec3& position, double yaw_deg, double pitch_deg);

}  // namespace vinesim
