#pragma once

// WebSocket front end for one session. A single I/O thread owns the session:
// network handlers only latch inputs and queue outgoing frames, and the tick
// timer runs on the same thread.

#include "vinesim/teleop.hpp"

#include <memory>
#include <string>

namespace vinesim {

struct ServerOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8765;  ///< 0 picks a free port
    double tick_hz = 50.0;
    double broadcast_hz = 25.0;
    std::size_t location = 0;
    std::size_t max_points = 256;  ///< backbone points per state message
    std::string log_path;          ///< empty: no run log
};

class Server {
public:
    Server(Course course, ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Bound port, valid once constructed.
    unsigned short port() const;

    /// Serves until stop() is called from another thread or a signal handler.
    void run();
    /// run() on a background thread.
    void start();
    /// Stops serving, finishes the log and joins the background thread.
    void stop();

    class Impl;

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace vinesim
