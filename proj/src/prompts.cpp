#include <map>

#include "steward/error.hpp"
#include "steward/llm.hpp"

namespace steward {

namespace {

const char* kStewardRole =
    "You are the steward of a smartphone. You break a user's request into app-level tasks, "
    "assign each task to the staff agent of exactly one installed app, and route information "
    "between the tasks. You never operate the phone yourself.";

const char* kStaffRole =
    "You are the staff agent for the {app_name} app. {app_description} "
    "You have proficiency in this app: you know its screens, its buttons and how its tasks are done. "
    "You only act inside {app_name}.";

std::map<std::string, PromptTemplate> build() {
  std::map<std::string, PromptTemplate> t;

  t["schedule"] = {
      "schedule",
      kStewardRole,
      {{"INSTRUCTION: Check the weather in Paris and send an email to boss@example.com about the temperature\n"
        "APPS:\n- weather: Weather app to check the forecast in a city.\n- gmail: Gmail email app to send an email.",
        "THOUGHT: The temperature comes from the weather app and is then mailed.\n"
        "TASK: t1 | weather | check the weather in Paris\n"
        "TASK: t2 | gmail | send an email to boss@example.com about {temperature}\n"
        "EDGE: t1 -> t2 | temperature"},
       {"INSTRUCTION: Set an alarm for 7:00 a.m.\n"
        "APPS:\n- clock: Clock app to set an alarm.\n- notes: Notes app to create a note.",
        "THOUGHT: A single clock task, no information flows.\n"
        "TASK: t1 | clock | set an alarm for 7:00 a.m."}},
      "THOUGHT: <one line of reasoning>\n"
      "TASK: <task_id> | <app_id> | <task description, with {label} where an upstream result goes>\n"
      "EDGE: <from task_id> -> <to task_id> | <label>\n"
      "One TASK line per task, one EDGE line per information flow. Use only the listed app ids.",
  };

  t["plan"] = {
      "plan",
      kStaffRole,
      {},
      "STEP: <short step>\nSOURCE: <guideline entry id you relied on>\n"
      "One STEP line per step; SOURCE lines are optional.",
  };

  t["predict"] = {
      "predict",
      kStaffRole,
      {},
      "THOUGHT: <one line>\nACTION: <one of: click <element_id> | input \"<text>\" | swipe up|down|left|right | back | finish>",
  };

  t["summarize"] = {
      "summarize",
      kStaffRole,
      {},
      "RECAP: <what was done so far>\nRESULT: <what happened after the last action>\n"
      "ELEMENT: <what the touched element is for>",
  };

  t["evaluate"] = {
      "evaluate",
      kStewardRole,
      {{"TASK: set an alarm for 6:30 p.m.\nHISTORY:\n1. click:Clock\n2. click:Add alarm\n3. input:6:30 p.m.\n"
        "4. click:Save\n5. finish\nFINAL SCREEN:\n# app=clock screen=alarms scroll=0\n[1] label \"Alarm 18:30\" static",
        "VERDICT: SUCCESS\nRATIONALE: The alarm list shows an alarm at 18:30."},
       {"TASK: create a note with the flight information\nHISTORY:\n1. click:Notes\n2. click:New note\n3. finish\n"
        "FINAL SCREEN:\n# app=notes screen=editor scroll=0\n[1] text_field \"Content\" interactive",
        "VERDICT: ERROR\nRATIONALE: The note content was never typed or saved."}},
      "VERDICT: SUCCESS|ERROR\nRATIONALE: <one line>",
  };

  t["reflect"] = {
      "reflect",
      kStewardRole,
      {{"TASK: create a note with the flight information\nVERDICT: ERROR: The note content was never typed.\n"
        "HISTORY:\n1. click:Notes\n2. click:New note\n3. finish",
        "DIAGNOSIS: The staff finished before typing the content.\n"
        "SUGGESTION: Type the flight information into the Content field, then tap \"Save\"."},
       {"TASK: set an alarm for 7:00 a.m.\nVERDICT: ERROR: Step budget exhausted.\n"
        "HISTORY:\n1. click:Clock\n2. swipe:down\n3. swipe:down\n4. swipe:down",
        "DIAGNOSIS: The staff kept scrolling instead of opening the alarm editor.\n"
        "SUGGESTION: Tap \"Add alarm\" on the first screen."}},
      "DIAGNOSIS: <one line>\nSUGGESTION: <one concrete next step>",
  };

  t["extract"] = {
      "extract",
      kStewardRole,
      {{"TASK: check the weather in Paris\nNEEDED: temperature\nHISTORY:\n1. click:Weather\n2. click:Paris\n"
        "3. finish\nSEEN TEXT:\nParis\nTemperature: 18°C\nConditions: Cloudy",
        "RESULT: temperature | 18°C\nEXPERTISE: check the weather in a city\n"
        "GUIDELINE: Tap \"Paris\"\nGUIDELINE: Read the temperature"},
       {"TASK: set an alarm for 7:00 a.m.\nNEEDED:\nHISTORY:\n1. click:Clock\n2. click:Add alarm\n3. input:7:00 a.m.\n"
        "4. click:Save\n5. finish\nSEEN TEXT:\nAlarms\nAlarm 07:00",
        "EXPERTISE: set an alarm for a time\nGUIDELINE: Tap \"Add alarm\"\nGUIDELINE: Type \"7:00 a.m.\"\n"
        "GUIDELINE: Tap \"Save\""}},
      "RESULT: <label> | <value>   (one per NEEDED label, value copied from the seen text)\n"
      "EXPERTISE: <capability phrase for the app>\nGUIDELINE: <step>   (one per step)",
  };

  t["adjust"] = {
      "adjust",
      kStewardRole,
      {{"TASK: send an email to boss@example.com about {temperature}\nRESULT: temperature = 18°C",
        "TASK: send an email to boss@example.com about 18°C"},
       {"TASK: set an alarm for {arrival_time}\nRESULT: arrival_time = 6:30 p.m.",
        "TASK: set an alarm for 6:30 p.m."}},
      "TASK: <the task description with the result substituted for its placeholder>",
  };

  t["expertise"] = {
      "expertise",
      kStewardRole,
      {{"APP: clock\nKNOWN:\n- set an alarm for a time\nCANDIDATE: set an alarm for a time",
        "NOVEL: no\nREASON: Already listed."},
       {"APP: expedia\nKNOWN:\n- save a trip\nCANDIDATE: search a one-way flight between cities",
        "NOVEL: yes\nREASON: Flight search is not covered."}},
      "NOVEL: yes|no\nREASON: <one line>",
  };
  return t;
}

const std::map<std::string, PromptTemplate>& templates() {
  static const auto t = build();
  return t;
}

}  // namespace

const std::vector<std::string>& prompt_kinds() {
  static const std::vector<std::string> kinds = {"schedule", "plan",    "predict", "summarize", "evaluate",
                                                 "reflect",  "extract", "adjust",  "expertise"};
  return kinds;
}

const PromptTemplate& prompt_template(const std::string& kind) {
  auto it = templates().find(kind);
  if (it == templates().end()) throw Error(ErrorKind::kConfig, "unknown prompt kind: " + kind);
  return it->second;
}

}  // namespace steward
