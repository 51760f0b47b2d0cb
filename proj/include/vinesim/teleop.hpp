#pragma once

// Fixed-tick session engine: operator input -> steering and growth
// controllers -> body simulation, plus snapshots, the wire protocol and the
// run log.

#include "vinesim/body.hpp"
#include "vinesim/growth.hpp"
#include "vinesim/input.hpp"
#include "vinesim/scenario.hpp"
#include "vinesim/steering.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace vinesim {

struct SessionOptions {
    double tick_hz = 50.0;
    std::size_t location = 0;
    bool guard = true;  ///< anti-slack rule; off only for demonstrations
};

struct Snapshot {
    std::uint64_t tick = 0;
    double time = 0.0;  ///< s
    double total_length = 0.0;
    std::vector<Vec3> backbone;
    Pose3 camera;
    double p_body = 0.0;
    PressureCommand steering;
    double omega_d = 0.0;
    double omega = 0.0;
    double u = 0.0;
    double growth_rate = 0.0;  ///< cm/s, negative while retracting
    std::vector<Event> events;
    bool saturated = false;
    bool estop = false;
    std::uint64_t state_hash = 0;
    std::uint64_t chain = 0;
};

class Session {
public:
    /// Courses built in code are normalised through their document so that
    /// a replay reconstructs them bit for bit.
    explicit Session(Course course, SessionOptions options = {});

    /// Validates and latches `input` for the next tick (last writer wins).
    /// Throws InvalidInput; the previous input then stays latched.
    void apply_input(const TeleopInput& input);
    /// Releases the e-stop latch at the next tick.
    void estop_clear();
    /// Treats the operator link as lost: e-stop latches at the next tick.
    void disconnect();

    /// Runs one tick and returns its events.
    std::vector<Event> tick();

    /// View as of the last completed tick. Backbone decimated to at most
    /// `max_points`, endpoints kept. Events are those since the last drain.
    Snapshot snapshot(std::size_t max_points = 256) const;
    /// snapshot() that also clears the pending event list.
    Snapshot drain_snapshot(std::size_t max_points = 256);

    const Course& course() const { return course_; }
    std::uint64_t course_hash() const { return course_hash_; }
    const SessionOptions& options() const { return options_; }
    double dt() const { return 1.0 / options_.tick_hz; }
    std::uint64_t tick_count() const { return sim_.tick; }
    std::uint64_t state_hash() const { return state_hash_; }
    std::uint64_t chain() const { return chain_; }
    const SimState& sim() const { return sim_; }
    const GrowthState& growth() const { return growth_; }
    const GrowthTick& last_growth() const { return last_growth_; }
    const PressureCommand& steering() const { return steering_; }
    const TeleopInput& latched_input() const { return input_; }
    bool estopped() const { return estopped_; }
    bool saturated() const { return saturated_; }
    const BodyConfig& body_config() const { return body_cfg_; }

    /// Called after every tick with the entry a log would store.
    std::function<void(const RunEntry&)> on_entry;

    /// Header fields for a run record of this session (no entries).
    RunRecord record_header() const;

private:
    std::uint64_t compute_hash() const;

    Course course_;
    SessionOptions options_;
    BodyConfig body_cfg_;
    std::uint64_t course_hash_ = 0;
    SimState sim_;
    GrowthState growth_;
    GrowthTick last_growth_;
    PressureCommand steering_;
    TeleopInput input_;
    bool clear_pending_ = false;
    bool disconnect_pending_ = false;
    bool estopped_ = false;
    bool saturated_ = false;
    std::uint64_t state_hash_ = 0;
    std::uint64_t chain_ = 0;
    std::vector<Event> pending_events_;
};

/// Chain seed for a session; chain_i = H(chain_{i-1}, hash_i).
std::uint64_t chain_seed(std::uint64_t course_hash, double tick_hz, const std::string& location);
std::uint64_t chain_step(std::uint64_t chain, std::uint64_t state_hash);

// ---- wire protocol --------------------------------------------------------

enum class JoinMode { Operate, Observe };

struct InputMessage {
    TeleopInput input;
};
struct EstopClearMessage {};
struct JoinMessage {
    JoinMode mode = JoinMode::Observe;
};

using ClientMessage = std::variant<InputMessage, EstopClearMessage, JoinMessage>;

/// Parses one client text frame. A "bend" {kappa, phi} (rad) is converted to
/// the equivalent joystick quaternion at `joystick_length`. Throws ParseError
/// naming the offending field.
ClientMessage parse_client_message(const std::string& text, double joystick_length);

nlohmann::json to_json(const TeleopInput& in);
TeleopInput input_from_json(const nlohmann::json& j, const std::string& path = "");
nlohmann::json to_json(const Event& e);
Event event_from_json(const nlohmann::json& j, const std::string& path = "");
nlohmann::json to_json(const Snapshot& s);
Snapshot snapshot_from_json(const nlohmann::json& j);

nlohmann::json state_message(const Snapshot& s);
nlohmann::json event_message(const Event& e);
nlohmann::json score_message(const ScoreBreakdown& s);
nlohmann::json error_message(const std::string& reason);

// ---- run log --------------------------------------------------------------

/// Streams a newline-delimited JSON log: one header line, one line per tick,
/// and an optional summary line.
class LogWriter {
public:
    LogWriter(std::ostream& out, const RunRecord& header);
    void write(const RunEntry& e);
    void finish(double wall_duration, std::optional<double> score = std::nullopt);

private:
    std::ostream& out_;
};

void write_log(std::ostream& out, const RunRecord& record);

/// Reads a log. A truncated final line is dropped; corruption elsewhere
/// raises ParseError.
RunRecord read_log(std::istream& in);
RunRecord read_log_file(const std::string& path);

struct ReplayResult {
    std::uint64_t ticks = 0;
    std::uint64_t chain = 0;
    std::vector<std::uint64_t> hashes;
    Snapshot final_snapshot;
    RunRecord rerun;  ///< record regenerated by the replay
};

/// Re-simulates a record. When `course` is given it must match the record's
/// course hash; otherwise the embedded course is used. With `verify`, the
/// first tick whose state hash differs raises ReplayIntegrityError.
ReplayResult replay(const RunRecord& record, const Course* course = nullptr, bool verify = true);

/// Simulates the embedded/explicit course from a record's inputs without
/// verification and returns the session (for inspection).
Session replay_session(const RunRecord& record, const Course* course = nullptr);

}  // namespace vinesim
