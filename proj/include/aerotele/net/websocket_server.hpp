#pragma once

#include <atomic>
#include <chrono>
#include <deque>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "aerotele/metrics.hpp"
#include "aerotele/protocol.hpp"
#include "aerotele/scenario.hpp"
#include "aerotele/session.hpp"

namespace aerotele::net {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

struct ServeOptions {
    std::string host = "127.0.0.1";
    unsigned short port = 8765;
    std::string record;          // session log path; later sessions get a .N suffix
    std::string trials;          // trial CSV appended when a session ends
    SessionOptions session;
    std::size_t max_outbound = 256;  // queued frames before state frames are dropped
    bool realtime = true;        // pace ticks to the wall clock
    std::size_t max_sessions = 0;  // stop accepting after this many; 0 = unlimited
};

/// host:port, or a bare port.
inline std::pair<std::string, unsigned short> parse_listen(const std::string& addr) {
    const auto colon = addr.rfind(':');
    const std::string host = colon == std::string::npos ? "0.0.0.0" : addr.substr(0, colon);
    const std::string port = colon == std::string::npos ? addr : addr.substr(colon + 1);
    try {
        std::size_t used = 0;
        const int p = std::stoi(port, &used);
        if (used != port.size() || p <= 0 || p > 65535) throw std::invalid_argument(port);
        return {host.empty() ? "0.0.0.0" : host, static_cast<unsigned short>(p)};
    } catch (const std::logic_error&) {
        throw ValidationError("listen address must be host:port, got '" + addr + "'");
    }
}

/// Appends rows under a single header, shared by all sessions of a server.
class TrialSink {
public:
    explicit TrialSink(std::string path) : path_(std::move(path)) {}

    void append(const TrialRecord& r) {
        if (path_.empty()) return;
        std::lock_guard lock(mutex_);
        const bool fresh = !std::ifstream(path_).good();
        std::ofstream os(path_, std::ios::app);
        if (fresh) write_trial_csv_header(os);
        write_trial_csv_row(os, r);
    }

private:
    std::string path_;
    std::mutex mutex_;
};

/// One console connection driving one session on its own io_context. Input
/// frames fill a latest-wins slot read once per tick; outgoing events and the
/// end frame are never dropped, state and feedback frames are when the
/// client falls behind.
class Connection : public std::enable_shared_from_this<Connection> {
public:
    Connection(tcp::socket socket, ScenarioConfig sc, ServeOptions opt, std::string record_path, TrialSink& trials)
        : ws_(std::move(socket)),
          timer_(ws_.get_executor()),
          opt_(std::move(opt)),
          trials_(trials) {
        if (!record_path.empty()) {
            record_.open(record_path);
            if (!record_) throw std::runtime_error("cannot open " + record_path);
            opt_.session.record = &record_;
        }
        opt_.session.emit_frames = true;
        session_.emplace(std::move(sc), opt_.session);
    }

    void start() {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
            if (ec) return;
            self->send({0, self->session_->hello()}, true);
            self->read();
            self->next_tick_ = std::chrono::steady_clock::now();
            self->schedule();
        });
    }

private:
    using Clock = std::chrono::steady_clock;

    void read() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->closed_ = true;
                self->session_->end("client");
                if (!self->reported_) self->report();
                return;
            }
            const std::string text = beast::buffers_to_string(self->buffer_.data());
            self->buffer_.consume(self->buffer_.size());
            self->handle(text);
            if (!self->closed_) self->read();
        });
    }

    void handle(const std::string& text) {
        try {
            const protocol::Message m = protocol::decode(text);
            if (const auto* in = std::get_if<protocol::Input>(&m.payload)) {
                // latest wins, but a pending gripper command survives later holds
                const GripperCommand kept = latest_ ? latest_->gripper : GripperCommand::None;
                latest_ = *in;
                if (in->gripper == GripperCommand::None) latest_->gripper = kept;
            } else if (const auto* t = std::get_if<protocol::Tlx>(&m.payload)) {
                TlxResponse r{t->ratings, t->weights};
                session_->set_tlx(r);
                if (session_->done() && !reported_) report();
            } else if (std::holds_alternative<protocol::End>(m.payload)) {
                session_->end("client");
            } else if (!std::holds_alternative<protocol::Hello>(m.payload)) {
                throw ProtocolError(std::string("consoles do not send ") + protocol::kind_name(m.payload));
            }
        } catch (const Error& e) {
            send({session_->tick(), protocol::Event{"protocol_error", e.what(), session_->time()}}, true);
        }
    }

    void schedule() {
        if (opt_.realtime) {
            next_tick_ += std::chrono::microseconds(static_cast<long>(session_->scenario().params.tick * 1e6));
            // after a stall, resume from now instead of bursting to catch up
            if (Clock::now() - next_tick_ > std::chrono::milliseconds(100)) next_tick_ = Clock::now();
            timer_.expires_at(next_tick_);
        } else {
            timer_.expires_after(std::chrono::microseconds(0));
        }
        timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
            if (!ec) self->tick();
        });
    }

    void tick() {
        if (closed_) return;
        if (latest_) {
            session_->submit(*latest_);
            latest_.reset();
        }
        session_->step();
        for (auto& m : session_->drain()) {
            const bool lossless = !std::holds_alternative<protocol::State>(m.payload) &&
                                  !std::holds_alternative<protocol::Feedback>(m.payload);
            send(m, lossless);
        }
        if (session_->done()) {
            // keep the socket open for the TLX form
            if ((session_->end_reason() == "client" || session_->has_tlx()) && !reported_) report();
            return;
        }
        schedule();
    }

    void report() {
        reported_ = true;
        trials_.append(session_->record());
    }

    void send(const protocol::Message& m, bool lossless) {
        if (closed_) return;
        if (!lossless && outbound_.size() >= opt_.max_outbound) return;
        outbound_.push_back(protocol::encode(m));
        if (outbound_.size() == 1) write();
    }

    void write() {
        ws_.text(true);
        ws_.async_write(asio::buffer(outbound_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
            if (ec) {
                self->closed_ = true;
                return;
            }
            self->outbound_.pop_front();
            if (!self->outbound_.empty()) self->write();
        });
    }

    websocket::stream<beast::tcp_stream> ws_;
    asio::steady_timer timer_;
    beast::flat_buffer buffer_;
    ServeOptions opt_;
    TrialSink& trials_;
    std::ofstream record_;
    std::optional<Session> session_;
    std::optional<protocol::Input> latest_;
    std::deque<std::string> outbound_;
    Clock::time_point next_tick_;
    bool closed_ = false;
    bool reported_ = false;
};

/// Accepts connections and runs each session on its own thread until
/// `stop` is set or max_sessions have been served.
inline void serve(const ScenarioConfig& sc, const ServeOptions& opt, std::atomic<bool>& stop,
                  const std::function<void(unsigned short)>& on_listening = {}) {
    asio::io_context accept_ctx;
    tcp::acceptor acceptor(accept_ctx, {asio::ip::make_address(opt.host), opt.port});
    if (on_listening) on_listening(acceptor.local_endpoint().port());
    TrialSink trials(opt.trials);
    std::vector<std::thread> workers;
    std::size_t served = 0;
    acceptor.non_blocking(true);
    while (!stop && (opt.max_sessions == 0 || served < opt.max_sessions)) {
        // each session owns its io_context; the socket is accepted straight into it
        auto ctx = std::make_shared<asio::io_context>();
        tcp::socket socket(*ctx);
        beast::error_code ec;
        acceptor.accept(socket, ec);
        if (ec == asio::error::would_block || ec == asio::error::try_again) {
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
            continue;
        }
        if (ec) throw beast::system_error(ec);
        socket.non_blocking(false);
        ++served;
        std::string path = opt.record;
        if (!path.empty() && served > 1) path += "." + std::to_string(served);
        workers.emplace_back([&sc, &opt, &trials, path, ctx, s = std::move(socket)]() mutable {
            try {
                std::make_shared<Connection>(std::move(s), sc, opt, path, trials)->start();
                ctx->run();
            } catch (const std::exception& e) {
                std::cerr << "session: " << e.what() << '\n';
            }
        });
    }
    for (auto& t : workers) t.join();
}

}  // namespace aerotele::net
