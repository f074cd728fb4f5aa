#include "domo/installation.hpp"

namespace domo {

Installation::Installation(const HouseConfig& house, const GatewayConfig& gateway,
                           BridgeMaster::SearchStrategy strategy)
    : house_(std::make_unique<House>(house)),
      master_(house_->bridge_port(), strategy),
      leds_(house_->firmware_port()),
      gateway_(GatewayLinks{master_, leds_, [h = house_.get()](std::uint64_t ms) { h->advance(ms); },
                            [h = house_.get()] { return h->clock().now_ms(); }},
               gateway) {}

}  // namespace domo
