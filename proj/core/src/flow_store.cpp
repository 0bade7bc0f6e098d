#include "cflow/flow_store.hpp"

#include "cflow/errors.hpp"

namespace cflow {

DirectoryFlowStore::DirectoryFlowStore(std::filesystem::path root)
    : root_(std::move(root)) {}

const FlowMap& DirectoryFlowStore::get(const std::string& flow_ref) {
  {
    std::lock_guard lock(mutex_);
    if (const auto it = cache_.find(flow_ref); it != cache_.end()) {
      return *it->second;
    }
  }
  // Parse outside the lock; a concurrent load of the same ref just loses
  // the try_emplace race and is discarded.
  auto map = std::make_unique<FlowMap>(read_flo_file(root_ / flow_ref));
  std::lock_guard lock(mutex_);
  const auto [it, _] = cache_.try_emplace(flow_ref, std::move(map));
  return *it->second;
}

void MemoryFlowStore::add(std::string flow_ref, FlowMap map) {
  maps_.insert_or_assign(std::move(flow_ref), std::move(map));
}

const FlowMap& MemoryFlowStore::get(const std::string& flow_ref) {
  const auto it = maps_.find(flow_ref);
  if (it == maps_.end()) {
    raise(Errc::io_error, "no flow map registered for '" + flow_ref + "'");
  }
  return it->second;
}

}  // namespace cflow
