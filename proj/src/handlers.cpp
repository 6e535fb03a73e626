#include "blockprof/handlers.hpp"

#include "blockprof/logformat.hpp"

namespace blockprof {

namespace {

void sealCurrent(HandlerState& state) {
  BufferBlock* block = state.current;
  state.current = nullptr;
  block->channel_id = state.channel_id;
  block->seq_no = state.next_seq++;
  ++state.sealed_blocks;
  state.pipeline->sealAndSubmit(block);
}

}  // namespace

[[gnu::noinline]] void handleNull(const TimestampEntry&) noexcept {}

void handleDirect(const TimestampEntry& entry, HandlerState& state) noexcept {
  const auto record = logformat::encodeEntry(entry);
  ++state.logged;
  if (!state.sink->write(record)) ++state.dropped;
}

void handleBuffered(const TimestampEntry& entry, HandlerState& state) noexcept {
  if (state.current == nullptr) {
    try {
      state.current = state.pipeline->acquireEmpty();
    } catch (const PipelineStopped&) {
      ++state.dropped;
      return;
    }
  }
  ++state.logged;
  if (state.current->append(entry)) sealCurrent(state);
}

void dispatch(const TimestampEntry& entry, HandlerState& state) noexcept {
  switch (state.kind) {
    case HandlerKind::Null:
      handleNull(entry);
      return;
    case HandlerKind::DirectId:
      handleDirect(entry, state);
      return;
    case HandlerKind::BufferedId:
    case HandlerKind::BufferedZstd:
    case HandlerKind::BufferedRealtime:
      handleBuffered(entry, state);
      return;
  }
}

void flushFillingBlock(HandlerState& state) {
  if (state.current == nullptr) return;
  if (state.current->empty()) {
    state.pipeline->releaseEmpty(state.current);
    state.current = nullptr;
    return;
  }
  sealCurrent(state);
}

}  // namespace blockprof
