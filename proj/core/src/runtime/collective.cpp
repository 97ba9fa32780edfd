#include "arena/runtime/collective.hpp"

namespace arena::rt {

std::optional<CollectiveResult> CollectiveGroup::contribute(NodeId node, learn::GradVector local) {
  if (!active_.count(node)) throw ProtocolViolation("node " + std::to_string(node) + " is not in this policy group");
  if (pending_.count(node)) throw ProtocolViolation("node " + std::to_string(node) + " contributed twice");
  pending_.emplace(node, std::move(local));
  return try_complete();
}

std::optional<CollectiveResult> CollectiveGroup::leave(NodeId node) {
  if (!active_.erase(node)) return std::nullopt;
  pending_.erase(node);
  return try_complete();
}

std::optional<CollectiveResult> CollectiveGroup::try_complete() {
  if (pending_.empty() || pending_.size() < active_.size()) return std::nullopt;
  CollectiveResult r;
  std::vector<learn::GradVector> parts;
  for (auto& [node, g] : pending_) {
    r.members.push_back(node);
    parts.push_back(std::move(g));
  }
  pending_.clear();
  try {
    r.mean = learn::allreduce_mean(parts);
  } catch (const learn::VersionMismatch& e) {
    r.error_kind = 1;
    r.error = e.what();
  } catch (const learn::LengthMismatchError& e) {
    r.error_kind = 2;
    r.error = e.what();
  } catch (const Error& e) {
    r.error_kind = 3;
    r.error = e.what();
  }
  return r;
}

void throw_collective_error(std::uint8_t kind, const std::string& message) {
  if (kind == 1) throw learn::VersionMismatch(message);
  if (kind == 2) throw learn::LengthMismatchError(message);
  throw Error(message);
}

std::map<std::string, CollectiveGroup> collective_groups(const std::vector<NodeDescriptor>& nodes) {
  std::map<std::string, std::set<NodeId>> members;
  for (const auto& n : nodes)
    for (const auto& g : n.groups)
      if (g.kind == GroupKind::Policy) members[g.name].insert(n.id);
  std::map<std::string, CollectiveGroup> out;
  for (auto& [name, m] : members) out.emplace(name, CollectiveGroup(std::move(m)));
  return out;
}

bool share_group(const NodeDescriptor& a, const NodeDescriptor& b) {
  for (const auto& ga : a.groups)
    for (const auto& gb : b.groups)
      if (ga.kind == GroupKind::Env && ga == gb) return true;
  return false;
}

}  // namespace arena::rt
