#pragma once

#include <stdexcept>
#include <string>

namespace sqlagent {

/// Base of every error the library raises. Stages catch this at task
/// granularity so that one bad task never aborts a batch.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Agent output did not follow the tagged turn grammar.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// SQL text could not be parsed by the reference extractor.
class ParseFailure : public Error {
 public:
  using Error::Error;
};

/// Grounding kept no table at all.
class EmptySchema : public Error {
 public:
  using Error::Error;
};

/// Transport to a policy backend failed after all retries.
class PolicyUnavailable : public Error {
 public:
  using Error::Error;
};

/// Backend replied with something that breaks the wire contract (or a mock
/// script has no entry for the request).
class BackendContract : public Error {
 public:
  using Error::Error;
};

/// The gold query itself failed to execute.
class GoldExecutionFailure : public Error {
 public:
  using Error::Error;
};

class DegenerateGroup : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MalformedRecord : public Error {
 public:
  using Error::Error;
};

class CorruptDatabase : public Error {
 public:
  using Error::Error;
};

class NoCandidates : public Error {
 public:
  using Error::Error;
};

}  // namespace sqlagent
