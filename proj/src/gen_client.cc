#include "sqlgrade/gen_client.h"

#include <thread>

namespace sqlgrade {

GenResult generate_with_retry(TextGenerator& client, const GenRequest& request, const RetryPolicy& policy,
                              const std::function<void(std::chrono::milliseconds)>& sleep) {
  const int attempts = policy.max_attempts < 1 ? 1 : policy.max_attempts;
  auto delay = policy.initial_backoff;
  GenResult last;
  for (int i = 0; i < attempts; ++i) {
    if (i > 0 && delay.count() > 0) {
      if (sleep) {
        sleep(delay);
      } else {
        std::this_thread::sleep_for(delay);
      }
      delay = std::chrono::milliseconds(static_cast<std::int64_t>(static_cast<double>(delay.count()) *
                                                                  policy.backoff_multiplier));
    }
    last = client.generate(request);
    if (last.ok() || last.error->kind == GenErrorKind::kModel) return last;
  }
  return last;
}

}  // namespace sqlgrade
