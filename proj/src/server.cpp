#include "vinesim/server.hpp"

#include "vinesim/error.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <deque>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

namespace vinesim {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

constexpr std::size_t kMaxQueue = 256;  // frames; a slow client loses old state frames first

class Client;

class Server::Impl {
public:
    Impl(Course course, ServerOptions options);

    void run();
    void start();
    void stop();
    unsigned short port() const { return port_; }

    // called from client handlers on the I/O thread
    void joined(const std::shared_ptr<Client>& c);
    void left(const std::shared_ptr<Client>& c);
    void message(const std::shared_ptr<Client>& c, const std::string& text);

private:
    void accept();
    void schedule();
    void on_tick();
    void broadcast(const std::string& frame, bool droppable);
    void finish_log();

    ServerOptions options_;
    net::io_context ioc_;
    tcp::acceptor acceptor_;
    net::steady_timer timer_;
    Session session_;
    unsigned short port_ = 0;
    std::vector<std::shared_ptr<Client>> clients_;
    std::weak_ptr<Client> operator_;
    std::chrono::steady_clock::time_point next_;
    std::chrono::steady_clock::time_point started_;
    std::uint64_t ticks_per_broadcast_ = 2;
    RunRecord record_;
    std::ofstream log_file_;
    std::optional<LogWriter> log_;
    std::thread thread_;
    bool stopped_ = false;
};

class Client : public std::enable_shared_from_this<Client> {
public:
    Client(tcp::socket socket, Server::Impl& server) : ws_(std::move(socket)), server_(server) {}

    void start()
    {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            self->open_ = true;
            self->server_.joined(self);
            self->read();
        });
    }

    void send(std::string frame, bool droppable)
    {
        if (!open_) return;
        if (droppable && queue_.size() >= kMaxQueue) return;
        queue_.push_back(std::move(frame));
        if (queue_.size() == 1) write();
    }

    void close()
    {
        if (!open_) return;
        open_ = false;
        beast::error_code ec;
        beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
        beast::get_lowest_layer(ws_).close();
    }

    bool open() const { return open_; }

private:
    void read()
    {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->drop();
                return;
            }
            const std::string text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            self->server_.message(self, text);
            if (self->open_) self->read();
        });
    }

    void write()
    {
        ws_.text(true);
        ws_.async_write(net::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->drop();
                return;
            }
            self->queue_.pop_front();
            if (!self->queue_.empty()) self->write();
        });
    }

    void drop()
    {
        const bool was_open = open_;
        open_ = false;
        queue_.clear();
        if (was_open) server_.left(shared_from_this());
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    std::deque<std::string> queue_;
    Server::Impl& server_;
    bool open_ = false;
};

Server::Impl::Impl(Course course, ServerOptions options)
    : options_(std::move(options)),
      acceptor_(ioc_),
      timer_(ioc_),
      session_(std::move(course), SessionOptions{options_.tick_hz, options_.location, true})
{
    if (!(options_.broadcast_hz > 0.0)) throw InvalidInput("broadcast rate must be positive");
    ticks_per_broadcast_ =
        std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(options_.tick_hz / options_.broadcast_hz)));

    const tcp::endpoint ep(net::ip::make_address(options_.address), options_.port);
    acceptor_.open(ep.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(ep);
    acceptor_.listen();
    port_ = acceptor_.local_endpoint().port();

    record_ = session_.record_header();
    if (!options_.log_path.empty()) {
        log_file_.open(options_.log_path);
        if (!log_file_) throw InvalidInput("cannot write log '" + options_.log_path + "'");
        log_.emplace(log_file_, record_);
    }
    session_.on_entry = [this](const RunEntry& e) {
        record_.entries.push_back(e);
        if (log_) log_->write(e);
    };
}

void Server::Impl::accept()
{
    acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) return;  // acceptor closed
        // Single-threaded io_context, so the strand is only for form.
        std::make_shared<Client>(std::move(socket), *this)->start();
        accept();
    });
}

void Server::Impl::schedule()
{
    timer_.expires_at(next_);
    timer_.async_wait([this](beast::error_code ec) {
        if (!ec) on_tick();
    });
}

void Server::Impl::on_tick()
{
    const auto dt = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(session_.dt()));
    const auto events = session_.tick();
    for (const auto& e : events) broadcast(event_message(e).dump(), false);
    bool goal = false;
    for (const auto& e : events) goal = goal || e.kind == EventKind::GoalReached || e.kind == EventKind::CylinderToppled;
    if (goal) broadcast(score_message(score_run(record_, session_.course())).dump(), false);
    if (session_.tick_count() % ticks_per_broadcast_ == 0)
        broadcast(state_message(session_.drain_snapshot(options_.max_points)).dump(), true);

    next_ += dt;
    const auto now = std::chrono::steady_clock::now();
    if (now - next_ > std::chrono::milliseconds(500)) next_ = now;  // fell far behind: do not burst
    schedule();
}

void Server::Impl::broadcast(const std::string& frame, bool droppable)
{
    for (const auto& c : clients_) c->send(frame, droppable);
}

void Server::Impl::joined(const std::shared_ptr<Client>& c)
{
    clients_.push_back(c);
    const auto& course = session_.course();
    json hello{{"type", "hello"},
               {"role", "observer"},
               {"course", course.document},
               {"location", course.locations[options_.location].name},
               {"tick_hz", options_.tick_hz},
               {"broadcast_hz", options_.tick_hz / static_cast<double>(ticks_per_broadcast_)},
               {"joystick_length", course.robot.joystick_length},
               {"kappa_max", kMaxInvertibleBend / course.robot.joystick_length},
               {"adc_max", course.robot.growth.adc_max},
               {"operator_present", !operator_.expired()}};
    c->send(hello.dump(), false);
    c->send(state_message(session_.snapshot(options_.max_points)).dump(), true);
}

void Server::Impl::left(const std::shared_ptr<Client>& c)
{
    std::erase(clients_, c);
    if (operator_.lock() == c) {
        operator_.reset();
        session_.disconnect();  // fail closed
    }
}

void Server::Impl::message(const std::shared_ptr<Client>& c, const std::string& text)
{
    ClientMessage msg;
    try {
        msg = parse_client_message(text, session_.course().robot.joystick_length);
    } catch (const Error& e) {
        c->send(error_message(e.what()).dump(), false);
        return;
    }
    const bool is_operator = operator_.lock() == c;
    if (const auto* join = std::get_if<JoinMessage>(&msg)) {
        if (join->mode == JoinMode::Operate) {
            if (is_operator) return;
            if (!operator_.expired()) {
                c->send(error_message("another client is operating; joined read-only").dump(), false);
                c->send(json{{"type", "role"}, {"role", "observer"}}.dump(), false);
                return;
            }
            operator_ = c;
            c->send(json{{"type", "role"}, {"role", "operator"}}.dump(), false);
        } else {
            if (is_operator) {
                operator_.reset();
                session_.disconnect();
            }
            c->send(json{{"type", "role"}, {"role", "observer"}}.dump(), false);
        }
        return;
    }
    if (!is_operator) {
        c->send(error_message("read-only client: join as operator to send commands").dump(), false);
        return;
    }
    if (const auto* in = std::get_if<InputMessage>(&msg)) {
        try {
            session_.apply_input(in->input);
        } catch (const Error& e) {
            c->send(error_message(e.what()).dump(), false);
        }
    } else {
        session_.estop_clear();
    }
}

void Server::Impl::run()
{
    started_ = std::chrono::steady_clock::now();
    next_ = started_;
    accept();
    schedule();
    ioc_.run();
}

void Server::Impl::start()
{
    thread_ = std::thread([this] { run(); });
}

void Server::Impl::finish_log()
{
    if (!log_) return;
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    log_->finish(wall, score_run(record_, session_.course()).total);
    log_.reset();
}

void Server::Impl::stop()
{
    if (stopped_) return;
    stopped_ = true;
    net::post(ioc_, [this] {
        beast::error_code ec;
        acceptor_.close(ec);
        timer_.cancel();
        for (const auto& c : clients_) c->close();
        ioc_.stop();
    });
    if (thread_.joinable()) thread_.join();
    finish_log();
}

Server::Server(Course course, ServerOptions options) : impl_(std::make_unique<Impl>(std::move(course), std::move(options))) {}

Server::~Server() { impl_->stop(); }

unsigned short Server::port() const { return impl_->port(); }

void Server::run() { impl_->run(); }

void Server::start() { impl_->start(); }

void Server::stop() { impl_->stop(); }

}  // namespace vinesim
