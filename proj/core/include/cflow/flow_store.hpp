#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "cflow/flow_map.hpp"

namespace cflow {

/// Resolves the flow_ref strings carried by track frames to flow maps.
class FlowStore {
 public:
  virtual ~FlowStore() = default;

  /// Returns the map for a flow_ref. The reference stays valid for the
  /// lifetime of the store. Throws Error(io_error) when the ref cannot be
  /// resolved, or a parse error for corrupt files.
  virtual const FlowMap& get(const std::string& flow_ref) = 0;
};

/// Reads .flo files relative to a root directory, caching every map it has
/// seen. get() is thread-safe; cached entries are never evicted, which is
/// fine for evaluation-sized corpora.
class DirectoryFlowStore final : public FlowStore {
 public:
  explicit DirectoryFlowStore(std::filesystem::path root);

  const FlowMap& get(const std::string& flow_ref) override;

 private:
  std::filesystem::path root_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::unique_ptr<FlowMap>> cache_;
};

/// In-memory store for generated scenarios and tests.
class MemoryFlowStore final : public FlowStore {
 public:
  void add(std::string flow_ref, FlowMap map);

  const FlowMap& get(const std::string& flow_ref) override;

 private:
  std::unordered_map<std::string, FlowMap> maps_;
};

}  // namespace cflow
