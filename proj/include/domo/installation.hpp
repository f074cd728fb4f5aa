#pragma once

#include <memory>

#include "domo/bridge.hpp"
#include "domo/firmware.hpp"
#include "domo/gateway.hpp"
#include "domo/house.hpp"

namespace domo {

/// A house wired to a gateway the way the real deployment is: the gateway
/// reaches the sensors only through the serial bridge and the LEDs only
/// through the firmware serial link.
class Installation {
 public:
  Installation(const HouseConfig& house, const GatewayConfig& gateway,
               BridgeMaster::SearchStrategy strategy = BridgeMaster::SearchStrategy::Accelerated);
  Installation(const Installation&) = delete;
  Installation& operator=(const Installation&) = delete;

  House& house() { return *house_; }
  BridgeMaster& master() { return master_; }
  LedClient& leds() { return leds_; }
  Gateway& gateway() { return gateway_; }

 private:
  std::unique_ptr<House> house_;
  BridgeMaster master_;
  LedClient leds_;
  Gateway gateway_;
};

}  // namespace domo
