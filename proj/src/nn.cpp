#include "pitchtrack/nn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pitchtrack {
namespace nn {

namespace {

double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

// Mean cross-entropy from prelogits; stable for large |z|.
double cross_entropy(const Vector& z, const Vector& y) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    acc += softplus(z[i]) - y[i] * z[i];
  }
  return acc / static_cast<double>(z.size());
}

struct BatchForward {
  std::vector<Matrix> activations;  // tanh layers, rows = examples
  Vector prelogit;
};

BatchForward forward_batch(const Network& net, const Matrix& x) {
  BatchForward f;
  const Matrix* current = &x;
  for (int l = 0; l < net.num_hidden(); ++l) {
    Matrix z = (*current * net.weights[l]).rowwise() + net.biases[l].transpose();
    f.activations.push_back(z.array().tanh().matrix());
    current = &f.activations.back();
  }
  const int last = net.num_layers() - 1;
  f.prelogit = (*current * net.weights[last]).col(0) +
               Vector::Constant(current->rows(), net.biases[last][0]);
  return f;
}

}  // namespace

Vector NormalizationSpec::apply(const Vector& x) const {
  if (empty()) return x;
  if (x.size() != min.size())
    throw std::invalid_argument("normalization: dimension mismatch");
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double range = max[i] - min[i];
    out[i] = range > 0.0 ? 2.0 * (x[i] - min[i]) / range - 1.0 : 0.0;
  }
  return out;
}

Matrix NormalizationSpec::apply(const Matrix& x) const {
  if (empty()) return x;
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    out.row(r) = apply(Vector(x.row(r).transpose())).transpose();
  }
  return out;
}

Vector NormalizationSpec::invert(const Vector& x) const {
  if (empty()) return x;
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double range = max[i] - min[i];
    out[i] = range > 0.0 ? min[i] + 0.5 * (x[i] + 1.0) * range : min[i];
  }
  return out;
}

NormalizationSpec fit_normalization(const Matrix& x_train) {
  if (x_train.rows() == 0)
    throw std::invalid_argument("fit_normalization: empty training set");
  NormalizationSpec spec;
  spec.min = x_train.colwise().minCoeff().transpose();
  spec.max = x_train.colwise().maxCoeff().transpose();
  return spec;
}

Network make_network(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("make_network: need at least input and output");
  if (layer_sizes.back() != 1)
    throw std::invalid_argument("make_network: single output unit expected");
  Network net;
  net.layer_sizes = layer_sizes;
  std::mt19937_64 rng(seed);
  for (size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-a, a);
    Matrix w(fan_in, fan_out);
    for (int i = 0; i < fan_in; ++i)
      for (int j = 0; j < fan_out; ++j) w(i, j) = dist(rng);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Vector::Zero(fan_out));
  }
  return net;
}

Vector pack_parameters(const Network& net) {
  Eigen::Index total = 0;
  for (int l = 0; l < net.num_layers(); ++l)
    total += net.weights[l].size() + net.biases[l].size();
  Vector theta(total);
  Eigen::Index at = 0;
  for (int l = 0; l < net.num_layers(); ++l) {
    theta.segment(at, net.weights[l].size()) =
        Eigen::Map<const Vector>(net.weights[l].data(), net.weights[l].size());
    at += net.weights[l].size();
    theta.segment(at, net.biases[l].size()) = net.biases[l];
    at += net.biases[l].size();
  }
  return theta;
}

void unpack_parameters(Network& net, const Vector& theta) {
  Eigen::Index at = 0;
  for (int l = 0; l < net.num_layers(); ++l) {
    Eigen::Map<Vector>(net.weights[l].data(), net.weights[l].size()) =
        theta.segment(at, net.weights[l].size());
    at += net.weights[l].size();
    net.biases[l] = theta.segment(at, net.biases[l].size());
    at += net.biases[l].size();
  }
  if (at != theta.size())
    throw std::invalid_argument("unpack_parameters: size mismatch");
}

double loss_and_gradient(const Network& net, const Matrix& x, const Vector& y,
                         Vector& gradient) {
  const double n = static_cast<double>(x.rows());
  BatchForward f = forward_batch(net, x);
  const double loss = cross_entropy(f.prelogit, y);

  std::vector<Matrix> grad_w(net.num_layers());
  std::vector<Vector> grad_b(net.num_layers());

  // delta at the output: sigmoid(z) - y, scaled by 1/n.
  Vector delta_out(f.prelogit.size());
  for (Eigen::Index i = 0; i < f.prelogit.size(); ++i) {
    delta_out[i] = (sigmoid(f.prelogit[i]) - y[i]) / n;
  }
  const int last = net.num_layers() - 1;
  const Matrix& last_act = net.num_hidden() > 0 ? f.activations.back() : x;
  grad_w[last] = last_act.transpose() * delta_out;
  grad_b[last] = Vector::Constant(1, delta_out.sum());

  Matrix delta;
  if (net.num_hidden() > 0) delta = delta_out * net.weights[last].transpose();
  for (int l = net.num_hidden() - 1; l >= 0; --l) {
    delta = delta.cwiseProduct(
        (1.0 - f.activations[l].array().square()).matrix());
    const Matrix& below = (l == 0) ? x : f.activations[l - 1];
    grad_w[l] = below.transpose() * delta;
    grad_b[l] = delta.colwise().sum().transpose();
    if (l > 0) delta = delta * net.weights[l].transpose();
  }

  Eigen::Index total = 0;
  for (int l = 0; l < net.num_layers(); ++l)
    total += net.weights[l].size() + net.biases[l].size();
  gradient.resize(total);
  Eigen::Index at = 0;
  for (int l = 0; l < net.num_layers(); ++l) {
    gradient.segment(at, grad_w[l].size()) =
        Eigen::Map<const Vector>(grad_w[l].data(), grad_w[l].size());
    at += grad_w[l].size();
    gradient.segment(at, grad_b[l].size()) = grad_b[l];
    at += grad_b[l].size();
  }
  return loss;
}

double evaluate_loss(const Network& net, const Matrix& x, const Vector& y) {
  BatchForward f = forward_batch(net, x);
  return cross_entropy(f.prelogit, y);
}

namespace {

// Scaled conjugate gradients (Moller 1993). One epoch is one weight-update
// attempt; early stopping watches the validation loss of accepted epochs.
TrainLog train_scg(Network& net, const Matrix& x, const Vector& y,
                   const Matrix& val_x, const Vector& val_y,
                   const TrainConfig& cfg) {
  TrainLog log;
  Vector w = pack_parameters(net);
  Vector grad(w.size()), grad2(w.size());

  double loss = loss_and_gradient(net, x, y, grad);
  Vector r = -grad;
  Vector p = r;
  bool success = true;
  double lambda = 1e-6, lambda_bar = 0.0;
  double delta = 0.0;
  Vector step_grad;

  Vector best_w = w;
  double best_val = evaluate_loss(net, val_x, val_y);
  log.best_epoch = 0;
  log.best_val_loss = best_val;
  int fails = 0;
  const Eigen::Index dim = w.size();

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double p_norm2 = p.squaredNorm();
    if (p_norm2 == 0.0 || r.norm() < cfg.gradient_floor) break;

    if (success) {
      const double sigma = 1e-5 / std::sqrt(p_norm2);
      unpack_parameters(net, w + sigma * p);
      loss_and_gradient(net, x, y, grad2);
      step_grad = (grad2 - grad) / sigma;
      delta = p.dot(step_grad);
    }
    delta += (lambda - lambda_bar) * p_norm2;
    if (delta <= 0.0) {
      lambda_bar = 2.0 * (lambda - delta / p_norm2);
      delta = -delta + lambda * p_norm2;
      lambda = lambda_bar;
    }
    const double mu = p.dot(r);
    const double alpha = mu / delta;

    unpack_parameters(net, w + alpha * p);
    const double new_loss = evaluate_loss(net, x, y);
    const double comparison = 2.0 * delta * (loss - new_loss) / (mu * mu);

    if (comparison >= 0.0) {
      w += alpha * p;
      unpack_parameters(net, w);
      loss = loss_and_gradient(net, x, y, grad);
      const Vector r_new = -grad;
      lambda_bar = 0.0;
      success = true;
      if (epoch % static_cast<int>(dim) == 0) {
        p = r_new;
      } else {
        const double beta = (r_new.squaredNorm() - r_new.dot(r)) / mu;
        p = r_new + beta * p;
      }
      r = r_new;
      if (comparison >= 0.75) lambda = std::max(lambda * 0.25, 1e-15);

      const double val = evaluate_loss(net, val_x, val_y);
      log.train_loss.push_back(loss);
      log.val_loss.push_back(val);
      if (cfg.verbose) {
        std::fprintf(stderr, "  epoch %4d  train %.6f  val %.6f\n", epoch,
                     loss, val);
      }
      if (val < best_val) {
        best_val = val;
        best_w = w;
        log.best_epoch = epoch;
        fails = 0;
      } else {
        if (++fails > cfg.patience) break;
      }
    } else {
      lambda_bar = lambda;
      success = false;
      unpack_parameters(net, w);
    }
    if (comparison < 0.25) lambda += delta * (1.0 - comparison) / p_norm2;
    if (lambda > 1e20) break;
  }

  unpack_parameters(net, best_w);
  log.best_val_loss = best_val;
  return log;
}

// Full-batch gradient descent with a bold-driver step size; same interface
// and stopping rules as the SCG path.
TrainLog train_gd(Network& net, const Matrix& x, const Vector& y,
                  const Matrix& val_x, const Vector& val_y,
                  const TrainConfig& cfg) {
  TrainLog log;
  Vector w = pack_parameters(net);
  Vector grad(w.size());
  double loss = loss_and_gradient(net, x, y, grad);
  double lr = 0.5;

  Vector best_w = w;
  double best_val = evaluate_loss(net, val_x, val_y);
  log.best_epoch = 0;
  int fails = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    if (grad.norm() < cfg.gradient_floor) break;
    Vector w_try = w - lr * grad;
    unpack_parameters(net, w_try);
    Vector grad_try(w.size());
    const double loss_try = loss_and_gradient(net, x, y, grad_try);
    if (loss_try < loss) {
      w = w_try;
      loss = loss_try;
      grad = grad_try;
      lr *= 1.1;
    } else {
      lr *= 0.5;
      unpack_parameters(net, w);
      if (lr < 1e-14) break;
      continue;
    }
    const double val = evaluate_loss(net, val_x, val_y);
    log.train_loss.push_back(loss);
    log.val_loss.push_back(val);
    if (val < best_val) {
      best_val = val;
      best_w = w;
      log.best_epoch = epoch;
      fails = 0;
    } else if (++fails > cfg.patience) {
      break;
    }
  }
  unpack_parameters(net, best_w);
  log.best_val_loss = best_val;
  return log;
}

}  // namespace

TrainLog train(Network& net, const Matrix& x, const Vector& y,
               const Matrix& val_x, const Vector& val_y,
               const TrainConfig& cfg) {
  if (x.rows() == 0) throw std::invalid_argument("train: empty training set");
  if (val_x.rows() == 0)
    throw std::invalid_argument("train: empty validation set");
  if (x.rows() != y.size() || val_x.rows() != val_y.size())
    throw std::invalid_argument("train: target count mismatch");
  if (x.cols() != net.input_size())
    throw std::invalid_argument("train: feature dimension mismatch");
  if (cfg.patience < 1) throw std::invalid_argument("train: patience must be >= 1");
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(y[i] >= 0.0 && y[i] <= 1.0))
      throw std::invalid_argument("train: targets must lie in [0, 1]");
  }

  TrainLog log = cfg.optimizer == TrainConfig::Optimizer::kScg
                     ? train_scg(net, x, y, val_x, val_y, cfg)
                     : train_gd(net, x, y, val_x, val_y, cfg);
  for (double l : log.train_loss) {
    if (!std::isfinite(l))
      throw std::runtime_error("train: non-finite loss encountered");
  }
  return log;
}

ForwardResult forward(const Network& net, const Vector& x_raw) {
  Vector x = net.norm.apply(x_raw);
  if (x.size() != net.input_size())
    throw std::invalid_argument("forward: input dimension mismatch");
  ForwardResult out;
  Vector a = x;
  for (int l = 0; l < net.num_hidden(); ++l) {
    a = ((net.weights[l].transpose() * a + net.biases[l]).array().tanh()).matrix();
    out.hidden.push_back(a);
  }
  const int last = net.num_layers() - 1;
  out.prelogit = net.weights[last].col(0).dot(a) + net.biases[last][0];
  out.output = sigmoid(out.prelogit);
  return out;
}

double infer(const Network& net, const Vector& x) { return forward(net, x).output; }

double infer_prelogit(const Network& net, const Vector& x) {
  return forward(net, x).prelogit;
}

Vector hidden_activations(const Network& net, const Vector& x, int layer) {
  if (layer < 1 || layer > net.num_hidden())
    throw std::invalid_argument("hidden_activations: no such layer");
  return forward(net, x).hidden[layer - 1];
}

void save_model(const std::string& path, const Network& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << "pitchtrack-model v1\n";
  out << "layout " << (net.layout_tag.empty() ? "none" : net.layout_tag) << "\n";
  out << "layers";
  for (int s : net.layer_sizes) out << " " << s;
  out << "\n";
  out << "norm " << (net.norm.empty() ? 0 : 1) << "\n";
  out << "data\n";
  auto write_vec = [&out](const double* p, Eigen::Index n) {
    out.write(reinterpret_cast<const char*>(p),
              static_cast<std::streamsize>(n * sizeof(double)));
  };
  for (int l = 0; l < net.num_layers(); ++l) {
    write_vec(net.weights[l].data(), net.weights[l].size());
    write_vec(net.biases[l].data(), net.biases[l].size());
  }
  if (!net.norm.empty()) {
    write_vec(net.norm.min.data(), net.norm.min.size());
    write_vec(net.norm.max.data(), net.norm.max.size());
  }
}

Network load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  std::string line;
  std::getline(in, line);
  if (line != "pitchtrack-model v1")
    throw std::runtime_error("unsupported model format: " + line);

  Network net;
  bool has_norm = false;
  while (std::getline(in, line) && line != "data") {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "layout") {
      ls >> net.layout_tag;
      if (net.layout_tag == "none") net.layout_tag.clear();
    } else if (key == "layers") {
      int s;
      while (ls >> s) net.layer_sizes.push_back(s);
    } else if (key == "norm") {
      int v;
      ls >> v;
      has_norm = v != 0;
    } else {
      throw std::runtime_error("malformed model header: " + line);
    }
  }
  if (net.layer_sizes.size() < 2)
    throw std::runtime_error("model file missing layer sizes: " + path);

  auto read_vec = [&in, &path](double* p, Eigen::Index n) {
    in.read(reinterpret_cast<char*>(p),
            static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw std::runtime_error("truncated model file: " + path);
  };
  for (size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
    Matrix w(net.layer_sizes[l], net.layer_sizes[l + 1]);
    Vector b(net.layer_sizes[l + 1]);
    read_vec(w.data(), w.size());
    read_vec(b.data(), b.size());
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  if (has_norm) {
    net.norm.min.resize(net.layer_sizes[0]);
    net.norm.max.resize(net.layer_sizes[0]);
    read_vec(net.norm.min.data(), net.norm.min.size());
    read_vec(net.norm.max.data(), net.norm.max.size());
  }
  return net;
}

}  // namespace nn
}  // namespace pitchtrack
