#include "hguide/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <deque>
#include <iostream>

namespace hguide {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

const char* mime_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".wav") return "audio/wav";
  if (ext == ".ico") return "image/x-icon";
  return "application/octet-stream";
}

// Maps a request target onto static_dir, refusing anything that escapes it.
std::optional<std::filesystem::path> resolve_static(const std::filesystem::path& root, std::string_view target) {
  if (root.empty()) return std::nullopt;
  target = target.substr(0, target.find_first_of("?#"));
  if (target.empty() || target.front() != '/') return std::nullopt;
  std::filesystem::path rel = std::filesystem::path(std::string(target.substr(1))).lexically_normal();
  if (rel.empty() || rel == ".") rel = "index.html";
  for (const auto& part : rel) {
    if (part == "..") return std::nullopt;
  }
  if (rel.is_absolute()) return std::nullopt;
  auto full = root / rel;
  std::error_code ec;
  if (std::filesystem::is_directory(full, ec)) full /= "index.html";
  if (!std::filesystem::is_regular_file(full, ec)) return std::nullopt;
  return full;
}

}  // namespace

struct Server::Impl {
  Impl(SessionService& svc, ServerOptions o)
      : service(svc), opts(std::move(o)), acceptor(ioc), signals(ioc), origin(std::chrono::steady_clock::now()) {}

  double now() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin).count();
  }

  void accept();
  void shutdown();

  SessionService& service;
  ServerOptions opts;
  asio::io_context ioc;
  tcp::acceptor acceptor;
  asio::signal_set signals;
  std::chrono::steady_clock::time_point origin;
  bool stopping = false;
};

namespace {

class WsConn : public std::enable_shared_from_this<WsConn> {
 public:
  WsConn(Server::Impl& srv, tcp::socket sock) : srv_(srv), ws_(std::move(sock)), timer_(srv.ioc) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->session_ = self->srv_.service.open();
      self->read();
      self->arm_timer();
    });
  }

 private:
  void read() {
    ws_.async_read(buf_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->closed();
      const std::string text = beast::buffers_to_string(self->buf_.data());
      self->buf_.consume(self->buf_.size());
      self->deliver([&] { return self->session_->handle_text(text, self->srv_.now()); });
      self->read();
    });
  }

  void arm_timer() {
    timer_.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(srv_.opts.poll_interval)));
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->done_) return;
      self->deliver([&] { return self->session_->poll(self->srv_.now()); });
      self->arm_timer();
    });
  }

  template <class F>
  void deliver(F&& produce) {
    std::vector<std::string> out;
    try {
      out = produce();
    } catch (const std::exception& e) {
      std::cerr << "session " << session_->id() << ": " << e.what() << "\n";
      out = {R"({"type":"error","code":"internal_error","msg":"server failure"})"};
    }
    for (auto& m : out) queue_.push_back(std::move(m));
    if (!writing_) write_next();
  }

  void write_next() {
    if (queue_.empty() || done_) {
      writing_ = false;
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(asio::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->closed();
      self->queue_.pop_front();
      self->write_next();
    });
  }

  void closed() {
    if (done_) return;
    done_ = true;
    timer_.cancel();
    if (session_) {
      try {
        session_->close(srv_.now(), end_reason::kDisconnected);
      } catch (const std::exception& e) {
        std::cerr << "session " << session_->id() << ": " << e.what() << "\n";
      }
      srv_.service.release(session_);
    }
  }

  Server::Impl& srv_;
  websocket::stream<beast::tcp_stream> ws_;
  asio::steady_timer timer_;
  beast::flat_buffer buf_;
  std::shared_ptr<Session> session_;
  std::deque<std::string> queue_;
  bool writing_ = false;
  bool done_ = false;
};

class HttpConn : public std::enable_shared_from_this<HttpConn> {
 public:
  HttpConn(Server::Impl& srv, tcp::socket sock) : srv_(srv), stream_(std::move(sock)) {}

  void run() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buf_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (websocket::is_upgrade(self->req_)) {
        stream_release(self);
        return;
      }
      self->respond();
    });
  }

 private:
  static void stream_release(const std::shared_ptr<HttpConn>& self) {
    self->stream_.expires_never();
    std::make_shared<WsConn>(self->srv_, self->stream_.release_socket())->run(std::move(self->req_));
  }

  template <class Body>
  void send(http::response<Body>&& res) {
    auto sp = std::make_shared<http::response<Body>>(std::move(res));
    http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
      if (ec || sp->need_eof()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->run();
    });
  }

  http::response<http::string_body> text_response(http::status status, std::string body) {
    http::response<http::string_body> res{status, req_.version()};
    res.set(http::field::content_type, "text/plain; charset=utf-8");
    res.keep_alive(req_.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
  }

  void respond() {
    const bool head = req_.method() == http::verb::head;
    if (req_.method() != http::verb::get && !head) {
      return send(text_response(http::status::method_not_allowed, "method not allowed\n"));
    }
    const std::string_view target{req_.target().data(), req_.target().size()};
    if (target == "/healthz") return send(text_response(http::status::ok, "ok"));

    const auto file = resolve_static(srv_.opts.static_dir, target);
    if (!file) return send(text_response(http::status::not_found, "not found\n"));

    beast::error_code ec;
    http::file_body::value_type body;
    body.open(file->c_str(), beast::file_mode::scan, ec);
    if (ec) return send(text_response(http::status::not_found, "not found\n"));
    http::response<http::file_body> res{std::piecewise_construct, std::make_tuple(std::move(body)),
                                        std::make_tuple(http::status::ok, req_.version())};
    res.set(http::field::content_type, mime_type(*file));
    res.keep_alive(req_.keep_alive());
    res.prepare_payload();
    if (head) {
      http::response<http::empty_body> h{http::status::ok, req_.version()};
      h.set(http::field::content_type, mime_type(*file));
      h.content_length(res.body().size());
      h.keep_alive(req_.keep_alive());
      return send(std::move(h));
    }
    send(std::move(res));
  }

  Server::Impl& srv_;
  beast::tcp_stream stream_;
  beast::flat_buffer buf_;
  http::request<http::string_body> req_;
};

}  // namespace

void Server::Impl::accept() {
  acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket sock) {
    if (stopping || !acceptor.is_open()) return;
    if (!ec) std::make_shared<HttpConn>(*this, std::move(sock))->run();
    accept();
  });
}

Server::Server(SessionService& service, ServerOptions opts) : impl_(std::make_unique<Impl>(service, std::move(opts))) {
  const tcp::endpoint ep{asio::ip::make_address(impl_->opts.address), impl_->opts.port};
  auto& a = impl_->acceptor;
  a.open(ep.protocol());
  a.set_option(asio::socket_base::reuse_address(true));
  a.bind(ep);
  a.listen(asio::socket_base::max_listen_connections);
  impl_->accept();
  if (impl_->opts.handle_signals) {
    impl_->signals.add(SIGINT);
    impl_->signals.add(SIGTERM);
    impl_->signals.async_wait([impl = impl_.get()](beast::error_code ec, int) {
      if (!ec) impl->shutdown();
    });
  }
}

Server::~Server() = default;

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() { impl_->ioc.run(); }

void Server::Impl::shutdown() {
  if (stopping) return;
  stopping = true;
  service.shutdown(now());
  beast::error_code ignored;
  acceptor.close(ignored);
  signals.cancel(ignored);
  ioc.stop();
}

void Server::stop() {
  asio::post(impl_->ioc, [impl = impl_.get()] { impl->shutdown(); });
}

}  // namespace hguide
