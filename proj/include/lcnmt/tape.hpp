#ifndef LCNMT_TAPE_HPP
#define LCNMT_TAPE_HPP

#include <functional>
#include <unordered_map>
#include <vector>

#include "lcnmt/tensor.hpp"

namespace lcnmt {

// Handle into a tape. Only valid for the tape that produced it.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Define-by-run recording of primitive operations. Each op computes its
// result eagerly and records a closure that pushes gradients to its
// inputs. Creation order is a topological order, so backward() is a
// single reverse sweep. A tape supports one forward/backward pass;
// single-writer.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf holding a constant value; gradients stop here.
  Var input(Tensor value);
  // Leaf bound to an external parameter. backward() accumulates into the
  // parameter's grad. Watching the same tensor twice returns the same Var.
  Var param(Tensor& external);

  const Tensor& value(Var v) const;
  // Gradient buffer of a node after backward(); zeros if untouched.
  Tensor grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // y = W x + b with W (n,m), x (m), b (n).
  Var affine(Var x, Var W, Var b);
  // y = W x + U h + b; the fused two-input affine used by recurrent cells.
  Var affine2(Var x, Var W, Var h, Var U, Var b);
  // Row-wise affine: H (T,k), W (a,k), q (a) -> (T,a), row t = W H[t] + q.
  Var row_affine(Var H, Var W, Var q);
  Var matvec(Var A, Var x);   // A (r,c), x (c) -> (r)
  Var tmatvec(Var A, Var w);  // A (r,c), w (r) -> (c), i.e. A^T w
  Var add(Var a, Var b);
  Var add_n(const std::vector<Var>& terms);
  Var mul(Var a, Var b);
  // (1-z) * a + z * b elementwise; the GRU interpolation gate.
  Var convex_mix(Var z, Var a, Var b);
  Var scale(Var x, real c);
  Var add_const(Var x, real c);
  Var mul_const(Var x, Tensor mask);
  Var elementwise(Var x, Act f);
  Var tanh_(Var x) { return elementwise(x, Act::Tanh); }
  Var sigmoid_(Var x) { return elementwise(x, Act::Sigmoid); }
  Var exp_(Var x) { return elementwise(x, Act::Exp); }
  Var log_(Var x) { return elementwise(x, Act::Log); }
  Var softmax_masked(Var scores, std::vector<char> mask);
  Var log_softmax(Var logits);
  Var concat(const std::vector<Var>& parts);
  Var concat_rows(const std::vector<Var>& rows);
  Var row(Var M, std::size_t index);
  Var mean_rows(Var A);
  Var pick(Var v, std::size_t index);
  Var sum(Var v);
  Var reshape(Var x, std::vector<std::size_t> shape);

  // Reverse sweep from a scalar output. Visits recorded nodes in reverse
  // creation order; every parameter that influenced the output receives
  // its gradient, accumulating additively across uses.
  void backward(Var output);

  void clear();

 private:
  struct Node {
    Tensor value;
    Tensor gbuf;
    bool live = false;
    std::function<void()> back;
    Tensor* bound = nullptr;
  };

  int check(Var v) const;
  Var push(Tensor value, std::function<void()> back);
  const Tensor& val(int id) const { return nodes_[id].value; }
  // Gradient accumulator for a node; allocates and marks live.
  Tensor& g(int id);
  bool live(int id) const { return nodes_[id].live; }

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, int> watched_;
  bool backward_done_ = false;
};

}  // namespace lcnmt

#endif
