#include "gcs/error.hpp"

namespace gcs {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidMagnitude: return "InvalidMagnitude";
    case Errc::EmptyDatagram: return "EmptyDatagram";
    case Errc::UnknownCommand: return "UnknownCommand";
    case Errc::ConnectTimeout: return "ConnectTimeout";
    case Errc::BindFailure: return "BindFailure";
    case Errc::ReplyTimeout: return "ReplyTimeout";
    case Errc::DroneError: return "DroneError";
    case Errc::NotInSdkMode: return "NotInSdkMode";
    case Errc::StreamOff: return "StreamOff";
    case Errc::Overflow: return "Overflow";
    case Errc::InvalidWindow: return "InvalidWindow";
    case Errc::BadKernel: return "BadKernel";
    case Errc::BadParams: return "BadParams";
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::BadPipeline: return "BadPipeline";
    case Errc::MalformedFrame: return "MalformedFrame";
    case Errc::NoFrameYet: return "NoFrameYet";
    case Errc::IoFailure: return "IoFailure";
    case Errc::MalformedPpm: return "MalformedPpm";
    case Errc::NotFound: return "NotFound";
    case Errc::SideOutOfRange: return "SideOutOfRange";
    case Errc::BadPlan: return "BadPlan";
    case Errc::BadEndpoint: return "BadEndpoint";
  }
  return "Unknown";
}

}  // namespace gcs
