#pragma once

#include <string>

#include "rtb/agents/qnetwork.hpp"

namespace rtb::agents {

// A bidder sees only the observation. bid() must be safe to call from
// several threads at once.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual double bid(const Observation& obs) const = 0;
};

class ConstantBidPolicy : public Policy {
 public:
  explicit ConstantBidPolicy(double bid) : bid_(bid) {}
  std::string name() const override { return "constant"; }
  double bid(const Observation&) const override { return bid_; }

 private:
  double bid_;
};

// Greedy action of a trained Q-network, mapped through the bid grid.
class QPolicy : public Policy {
 public:
  QPolicy(QNetwork net, ActionGrid grid, std::string name = "exddqn");
  std::string name() const override { return name_; }
  double bid(const Observation& obs) const override;
  const QNetwork& net() const { return net_; }
  const ActionGrid& grid() const { return grid_; }

 private:
  QNetwork net_;
  ActionGrid grid_;
  std::string name_;
};

}  // namespace rtb::agents
