// SPDX-License-Identifier: Apache-2.0
#include "clawenv/service_registry.hpp"

#include "clawenv/errors.hpp"
#include "clawenv/http_client.hpp"
#include "clawenv/text.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

namespace clawenv {

std::string DataStore::next_id(const std::string& service, const FixtureSchema& schema) {
  auto& recs = records_[service];
  int& counter = counters_[service];
  if (counter == 0) counter = static_cast<int>(recs.size());
  for (;;) {
    ++counter;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%03d", counter);
    std::string id = schema.id_prefix + buf;
    bool used = std::any_of(recs.begin(), recs.end(), [&](const Json& r) {
      auto it = r.find(schema.id_field);
      return it != r.end() && it->is_string() && it->get<std::string>() == id;
    });
    if (!used) return id;
  }
}

namespace {

enum class Verb { list, get, create, update, remove, echo };

Verb verb_of(std::string_view action) {
  auto head = action.substr(0, action.find('_'));
  static const std::set<std::string_view> list{"list", "search", "find", "query", "web"};
  static const std::set<std::string_view> get{"get", "read", "fetch", "view", "show"};
  static const std::set<std::string_view> create{"create", "add",  "send",      "schedule",
                                                 "post",   "draft", "subscribe", "new"};
  static const std::set<std::string_view> update{"update", "edit", "mark", "set", "modify",
                                                 "move",   "assign", "resolve", "complete"};
  static const std::set<std::string_view> remove{"delete", "remove", "cancel", "archive",
                                                 "unsubscribe"};
  if (action == "web_search") return Verb::list;
  if (action == "web_fetch") return Verb::get;
  if (list.count(head)) return Verb::list;
  if (get.count(head)) return Verb::get;
  if (create.count(head)) return Verb::create;
  if (update.count(head)) return Verb::update;
  if (remove.count(head)) return Verb::remove;
  return Verb::echo;
}

std::string collection_key(const HandlerContext& ctx) {
  return ctx.schema.collection.empty() ? std::string("records") : ctx.schema.collection;
}

bool scalar_equal_ci(const Json& a, const Json& b) {
  if (a.is_string() && b.is_string()) return to_lower(a.get<std::string>()) == to_lower(b.get<std::string>());
  return a == b;
}

bool is_search_param(std::string_view name) {
  return name == "query" || name == "q" || name == "keyword" || name == "search";
}

bool any_string_contains(const Json& v, std::string_view needle) {
  if (v.is_string()) return icontains(v.get<std::string>(), needle);
  if (v.is_array() || v.is_object()) {
    for (const auto& item : v) {
      if (any_string_contains(item, needle)) return true;
    }
  }
  return false;
}

bool record_matches(const Json& rec, const std::string& name, const Json& value) {
  if (value.is_null()) return true;
  if (is_search_param(name)) {
    return value.is_string() ? any_string_contains(rec, value.get<std::string>()) : true;
  }
  auto check_field = [&](const Json& field) {
    if (field.is_array()) {
      return std::any_of(field.begin(), field.end(), [&](const Json& e) { return scalar_equal_ci(e, value); });
    }
    return scalar_equal_ci(field, value);
  };
  if (auto it = rec.find(name); it != rec.end()) return check_field(*it);
  if (auto it = rec.find(name + "s"); it != rec.end()) return check_field(*it);
  return true;  // params without a matching field do not filter
}

std::string id_param(const HandlerContext& ctx) {
  if (ctx.endpoint.param(ctx.schema.id_field)) return ctx.schema.id_field;
  for (const auto& p : ctx.endpoint.params) {
    if (p.name == "id" || (p.name.size() > 3 && p.name.ends_with("_id"))) return p.name;
  }
  if (ctx.body.contains(ctx.schema.id_field)) return ctx.schema.id_field;
  if (ctx.body.contains("id")) return "id";
  return ctx.schema.id_field;
}

std::vector<Json>::iterator find_record(HandlerContext& ctx, const Json& id) {
  auto& recs = ctx.records();
  return std::find_if(recs.begin(), recs.end(), [&](const Json& r) {
    auto it = r.find(ctx.schema.id_field);
    if (it == r.end()) return false;
    if (*it == id) return true;
    return it->is_string() && id.is_string() && it->get<std::string>() == id.get<std::string>();
  });
}

HandlerResult not_found(const HandlerContext& ctx, const Json& id) {
  return {404, Json{{"error", "not found"}, {ctx.schema.id_field, id}}};
}

HandlerResult list_records(HandlerContext& ctx) {
  Json out = Json::array();
  std::size_t limit = SIZE_MAX;
  for (const auto& rec : ctx.records()) {
    bool keep = true;
    for (const auto& [k, v] : ctx.body.items()) {
      if (k == "limit") {
        if (v.is_number_integer()) limit = v.get<std::size_t>();
        continue;
      }
      if (!record_matches(rec, k, v)) {
        keep = false;
        break;
      }
    }
    if (keep) out.push_back(rec);
  }
  if (out.size() > limit) out.erase(out.begin() + static_cast<std::ptrdiff_t>(limit), out.end());
  const auto n = out.size();
  return {200, Json{{collection_key(ctx), std::move(out)}, {"count", n}}};
}

HandlerResult get_record(HandlerContext& ctx) {
  const auto key = id_param(ctx);
  const Json id = ctx.body.value(key, Json());
  auto it = find_record(ctx, id);
  if (it == ctx.records().end()) return not_found(ctx, id);
  return {200, *it};
}

HandlerResult create_record(HandlerContext& ctx, Json defaults = Json::object()) {
  Json rec = Json::object();
  for (const auto& [k, v] : defaults.items()) rec[k] = v;
  for (const auto& [k, v] : ctx.body.items()) rec[k] = v;
  if (!rec.contains(ctx.schema.id_field)) {
    // Put the id first so records read naturally.
    Json with_id{{ctx.schema.id_field, ctx.store.next_id(ctx.spec.name, ctx.schema)}};
    for (const auto& [k, v] : rec.items()) with_id[k] = v;
    rec = std::move(with_id);
  }
  ctx.records().push_back(rec);
  return {200, Json{{"status", "created"}, {ctx.schema.id_field, rec[ctx.schema.id_field]}, {"record", rec}}};
}

HandlerResult update_record(HandlerContext& ctx) {
  const auto key = id_param(ctx);
  const Json id = ctx.body.value(key, Json());
  auto it = find_record(ctx, id);
  if (it == ctx.records().end()) return not_found(ctx, id);
  for (const auto& [k, v] : ctx.body.items()) {
    if (k != key) (*it)[k] = v;
  }
  return {200, Json{{"status", "updated"}, {"record", *it}}};
}

HandlerResult delete_record(HandlerContext& ctx) {
  const auto key = id_param(ctx);
  const Json id = ctx.body.value(key, Json());
  auto it = find_record(ctx, id);
  if (it == ctx.records().end()) return not_found(ctx, id);
  ctx.records().erase(it);
  return {200, Json{{"status", "deleted"}, {ctx.schema.id_field, id}}};
}

// --- bespoke handlers for the core library ---

HandlerResult list_inbox(HandlerContext& ctx) {
  const std::string folder = ctx.body.value("folder", std::string{"inbox"});
  const bool unread_only = ctx.body.value("unread_only", false);
  const std::string query = ctx.body.value("query", std::string{});
  Json out = Json::array();
  for (const auto& m : ctx.records()) {
    if (m.value("folder", std::string{"inbox"}) != folder) continue;
    if (unread_only && m.value("read", false)) continue;
    if (!query.empty() && !any_string_contains(m, query)) continue;
    out.push_back(m);
  }
  const auto n = out.size();
  return {200, Json{{"messages", std::move(out)}, {"count", n}}};
}

HandlerResult send_email(HandlerContext& ctx) {
  return create_record(ctx, Json{{"from", "me@company.com"}, {"folder", "sent"}, {"read", true}});
}

HandlerResult create_draft(HandlerContext& ctx) {
  return create_record(ctx, Json{{"from", "me@company.com"}, {"folder", "drafts"}, {"read", true}});
}

HandlerResult list_events(HandlerContext& ctx) {
  const std::string start = ctx.body.value("start_date", std::string{});
  const std::string end = ctx.body.value("end_date", std::string{});
  Json out = Json::array();
  for (const auto& e : ctx.records()) {
    const std::string day = e.value("start", std::string{}).substr(0, 10);
    if (!start.empty() && day < start.substr(0, 10)) continue;
    if (!end.empty() && day > end.substr(0, 10)) continue;
    out.push_back(e);
  }
  const auto n = out.size();
  return {200, Json{{"events", std::move(out)}, {"count", n}}};
}

HandlerResult web_fetch_live(HandlerContext& ctx) {
  const std::string url = ctx.body.value("url", std::string{});
  if (!ctx.allow_net) {
    return {403, Json{{"error", "network egress disabled; start with --allow-net"}, {"url", url}}};
  }
  HttpClient client(EgressPolicy{true});
  auto res = client.get(url, 20.0);
  if (res.status == 0) return {502, Json{{"error", res.error}, {"url", url}}};
  return {200, Json{{"url", url}, {"status", res.status}, {"content", res.body.substr(0, 65536)}}};
}

constexpr const char* kBuiltinSpecs = R"json([
{"name": "todo", "real_service": "Todoist", "description": "Task manager with CRUD and priorities",
 "endpoints": [
  {"path": "/todo/tasks", "name": "list_tasks", "description": "List tasks",
   "params": {"status": "string?", "priority": "string?", "tag": "string?"}},
  {"path": "/todo/tasks/get", "name": "get_task", "description": "Get a task by id",
   "params": {"task_id": "string!"}},
  {"path": "/todo/tasks/create", "name": "create_task", "description": "Create task (title, priority, due_date)",
   "params": {"title": "string!", "priority": "string?", "due_date": "string?", "tags": "array?", "description": "string?"}},
  {"path": "/todo/tasks/update", "name": "update_task", "description": "Update task fields",
   "params": {"task_id": "string!", "title": "string?", "status": "string?", "priority": "string?", "due_date": "string?", "tags": "array?"}},
  {"path": "/todo/tasks/delete", "name": "delete_task", "description": "Delete a task",
   "params": {"task_id": "string!"}}],
 "data_model": "Task{task_id, title, status, priority, tags[], due_date, assignee, description}",
 "fixture_schema": {"collection": "tasks", "id_field": "task_id", "id_prefix": "task-", "count": 7,
  "fields": {"title": {"type": "string", "required": true},
             "status": {"type": "string", "enum": ["open", "in-progress", "completed"]},
             "priority": {"type": "string", "enum": ["low", "medium", "high"]},
             "tags": {"type": "array", "items": "string"},
             "due_date": {"type": "date"},
             "assignee": {"type": "string"},
             "description": {"type": "string"}}}},
{"name": "gmail", "real_service": "Gmail", "description": "Email: list, read, send, draft",
 "endpoints": [
  {"path": "/gmail/messages", "name": "list_inbox", "description": "List messages in a folder",
   "params": {"folder": "string?", "unread_only": "boolean?", "query": "string?"}},
  {"path": "/gmail/messages/get", "name": "get_message", "description": "Read one message",
   "params": {"message_id": "string!"}},
  {"path": "/gmail/messages/search", "name": "search_emails", "description": "Search all messages",
   "params": {"query": "string!"}},
  {"path": "/gmail/send", "name": "send_email", "description": "Send an email (to, subject, body)",
   "params": {"to": "any!", "subject": "string!", "body": "string!", "cc": "any?"}},
  {"path": "/gmail/drafts/create", "name": "create_draft", "description": "Save a draft",
   "params": {"to": "any?", "subject": "string?", "body": "string?"}}],
 "data_model": "Message{message_id, from, to, subject, body, folder, date, read}",
 "fixture_schema": {"collection": "messages", "id_field": "message_id", "id_prefix": "msg-", "count": 5,
  "fields": {"from": {"type": "string", "required": true},
             "to": {"type": "any"},
             "subject": {"type": "string", "required": true},
             "body": {"type": "string"},
             "folder": {"type": "string", "enum": ["inbox", "sent", "drafts"]},
             "date": {"type": "date"},
             "read": {"type": "boolean"}}}},
{"name": "calendar", "real_service": "Google Calendar", "description": "Calendar events and scheduling",
 "endpoints": [
  {"path": "/calendar/events", "name": "list_events", "description": "List events in a date range",
   "params": {"start_date": "string?", "end_date": "string?"}},
  {"path": "/calendar/events/get", "name": "get_event", "description": "Get one event",
   "params": {"event_id": "string!"}},
  {"path": "/calendar/events/create", "name": "create_event", "description": "Create event (title, start, end, attendees)",
   "params": {"title": "string!", "start": "string!", "end": "string?", "attendees": "array?", "location": "string?", "description": "string?"}},
  {"path": "/calendar/events/update", "name": "update_event", "description": "Update an event",
   "params": {"event_id": "string!", "title": "string?", "start": "string?", "end": "string?", "attendees": "array?", "location": "string?"}},
  {"path": "/calendar/events/delete", "name": "delete_event", "description": "Delete an event",
   "params": {"event_id": "string!"}}],
 "data_model": "Event{event_id, title, start, end, attendees[], location, description}",
 "fixture_schema": {"collection": "events", "id_field": "event_id", "id_prefix": "evt-", "count": 6,
  "fields": {"title": {"type": "string", "required": true},
             "start": {"type": "date", "required": true},
             "end": {"type": "date"},
             "attendees": {"type": "array", "items": "string"},
             "location": {"type": "string"},
             "description": {"type": "string"}}}},
{"name": "contacts", "real_service": "Google Contacts", "description": "Contact directory: search, lookup",
 "endpoints": [
  {"path": "/contacts/search", "name": "search_contacts", "description": "Search contacts by name, email or company",
   "params": {"query": "string?", "company": "string?"}},
  {"path": "/contacts/get", "name": "get_contact", "description": "Get one contact",
   "params": {"contact_id": "string!"}},
  {"path": "/contacts/list", "name": "list_contacts", "description": "List all contacts",
   "params": {"company": "string?"}},
  {"path": "/contacts/create", "name": "create_contact", "description": "Create a contact",
   "params": {"name": "string!", "email": "string!", "phone": "string?", "company": "string?", "role": "string?"}}],
 "data_model": "Contact{contact_id, name, email, phone, company, role}",
 "fixture_schema": {"collection": "contacts", "id_field": "contact_id", "id_prefix": "c-", "count": 6,
  "fields": {"name": {"type": "string", "required": true},
             "email": {"type": "string", "required": true},
             "phone": {"type": "string"},
             "company": {"type": "string"},
             "role": {"type": "string"}}}},
{"name": "notes", "real_service": "Notion", "description": "Notes: create, search, organize",
 "endpoints": [
  {"path": "/notes/list", "name": "list_notes", "params": {"folder": "string?"}},
  {"path": "/notes/get", "name": "get_note", "params": {"note_id": "string!"}},
  {"path": "/notes/create", "name": "create_note", "params": {"title": "string!", "content": "string?", "folder": "string?"}},
  {"path": "/notes/search", "name": "search_notes", "params": {"query": "string!"}}],
 "fixture_schema": {"collection": "notes", "id_field": "note_id", "id_prefix": "note-",
  "fields": {"title": {"type": "string", "required": true}, "content": {"type": "string"}, "folder": {"type": "string"}}}},
{"name": "crm", "real_service": "Salesforce", "description": "Customer relationship: accounts, deals",
 "endpoints": [
  {"path": "/crm/customers", "name": "list_customers", "params": {"status": "string?", "query": "string?"}},
  {"path": "/crm/customers/get", "name": "get_customer", "params": {"customer_id": "string!"}},
  {"path": "/crm/customers/update", "name": "update_customer", "params": {"customer_id": "string!", "status": "string?", "tier": "string?", "notes": "string?"}},
  {"path": "/crm/customers/create", "name": "create_customer", "params": {"name": "string!", "email": "string?", "tier": "string?"}}],
 "fixture_schema": {"collection": "customers", "id_field": "customer_id", "id_prefix": "cust-",
  "fields": {"name": {"type": "string", "required": true}, "email": {"type": "string"}, "tier": {"type": "string"}, "status": {"type": "string"}}}},
{"name": "finance", "real_service": "QuickBooks", "description": "Financial data: transactions, budgets",
 "endpoints": [
  {"path": "/finance/transactions", "name": "list_transactions", "params": {"category": "string?", "query": "string?"}},
  {"path": "/finance/transactions/get", "name": "get_transaction", "params": {"transaction_id": "string!"}},
  {"path": "/finance/budget", "name": "get_budget", "params": {"transaction_id": "string?", "category": "string?"}},
  {"path": "/finance/transactions/create", "name": "create_transaction", "params": {"amount": "number!", "category": "string!", "description": "string?"}}],
 "fixture_schema": {"collection": "transactions", "id_field": "transaction_id", "id_prefix": "txn-",
  "fields": {"amount": {"type": "number", "required": true}, "category": {"type": "string"}, "description": {"type": "string"}, "date": {"type": "date"}}}},
{"name": "helpdesk", "real_service": "Zendesk", "description": "Support tickets: triage, resolve",
 "endpoints": [
  {"path": "/helpdesk/tickets", "name": "list_tickets", "params": {"status": "string?", "priority": "string?"}},
  {"path": "/helpdesk/tickets/get", "name": "get_ticket", "params": {"ticket_id": "string!"}},
  {"path": "/helpdesk/tickets/update", "name": "update_ticket", "params": {"ticket_id": "string!", "status": "string?", "priority": "string?", "assignee": "string?"}},
  {"path": "/helpdesk/tickets/create", "name": "create_ticket", "params": {"subject": "string!", "description": "string?", "priority": "string?"}}],
 "fixture_schema": {"collection": "tickets", "id_field": "ticket_id", "id_prefix": "tkt-",
  "fields": {"subject": {"type": "string", "required": true}, "status": {"type": "string", "enum": ["open", "pending", "resolved"]}, "priority": {"type": "string", "enum": ["low", "normal", "urgent"]}}}},
{"name": "inventory", "real_service": "Shopify", "description": "Product inventory: stock, orders",
 "endpoints": [
  {"path": "/inventory/products", "name": "list_products", "params": {"category": "string?", "query": "string?"}},
  {"path": "/inventory/products/get", "name": "get_product", "params": {"product_id": "string!"}},
  {"path": "/inventory/products/update", "name": "update_product", "params": {"product_id": "string!", "stock": "integer?", "price": "number?"}},
  {"path": "/inventory/orders/create", "name": "create_order", "params": {"product_id": "string!", "quantity": "integer!"}}],
 "fixture_schema": {"collection": "products", "id_field": "product_id", "id_prefix": "prod-",
  "fields": {"name": {"type": "string", "required": true}, "stock": {"type": "integer"}, "price": {"type": "number"}, "category": {"type": "string"}}}},
{"name": "kb", "real_service": "Confluence", "description": "Knowledge base: articles, search",
 "endpoints": [
  {"path": "/kb/articles/search", "name": "search_articles", "params": {"query": "string!"}},
  {"path": "/kb/articles/get", "name": "get_kb_article", "params": {"article_id": "string!"}},
  {"path": "/kb/articles", "name": "list_articles", "params": {"category": "string?"}},
  {"path": "/kb/articles/create", "name": "create_article", "params": {"title": "string!", "body": "string?", "category": "string?"}}],
 "fixture_schema": {"collection": "articles", "id_field": "article_id", "id_prefix": "kb-",
  "fields": {"title": {"type": "string", "required": true}, "body": {"type": "string"}, "category": {"type": "string"}}}},
{"name": "config", "real_service": "Admin console", "description": "System config: integrations, settings",
 "endpoints": [
  {"path": "/config/integrations", "name": "list_integrations", "params": {"status": "string?"}},
  {"path": "/config/integrations/get", "name": "get_integration", "params": {"integration_id": "string!"}},
  {"path": "/config/integrations/update", "name": "update_integration", "params": {"integration_id": "string!", "enabled": "boolean?", "settings": "object?"}},
  {"path": "/config/settings", "name": "list_settings", "params": {}}],
 "fixture_schema": {"collection": "integrations", "id_field": "integration_id", "id_prefix": "int-",
  "fields": {"name": {"type": "string", "required": true}, "enabled": {"type": "boolean"}, "status": {"type": "string"}}}},
{"name": "scheduler", "real_service": "cron", "description": "Job scheduler: cron tasks, triggers",
 "endpoints": [
  {"path": "/scheduler/jobs", "name": "list_jobs", "params": {"status": "string?"}},
  {"path": "/scheduler/jobs/get", "name": "get_job", "params": {"job_id": "string!"}},
  {"path": "/scheduler/jobs/create", "name": "create_job", "params": {"name": "string!", "cron": "string!", "command": "string?"}},
  {"path": "/scheduler/jobs/delete", "name": "delete_job", "params": {"job_id": "string!"}}],
 "fixture_schema": {"collection": "jobs", "id_field": "job_id", "id_prefix": "job-",
  "fields": {"name": {"type": "string", "required": true}, "cron": {"type": "string"}, "status": {"type": "string"}}}},
{"name": "rss", "real_service": "Feedly", "description": "RSS feeds: articles, subscriptions",
 "endpoints": [
  {"path": "/rss/feeds", "name": "list_feeds", "params": {}},
  {"path": "/rss/articles", "name": "list_rss_articles", "params": {"feed_id": "string?", "query": "string?"}},
  {"path": "/rss/articles/get", "name": "get_rss_article", "params": {"article_id": "string!"}},
  {"path": "/rss/feeds/subscribe", "name": "subscribe_feed", "params": {"url": "string!"}}],
 "fixture_schema": {"collection": "articles", "id_field": "article_id", "id_prefix": "rss-",
  "fields": {"title": {"type": "string", "required": true}, "feed_id": {"type": "string"}, "summary": {"type": "string"}}}},
{"name": "web", "real_service": "Web search", "description": "Web search + fetch (mock)",
 "endpoints": [
  {"path": "/web/search", "name": "web_search", "params": {"query": "string!"}},
  {"path": "/web/fetch", "name": "web_fetch", "params": {"url": "string!"}}],
 "fixture_schema": {"collection": "pages", "id_field": "url",
  "fields": {"title": {"type": "string", "required": true}, "content": {"type": "string"}}}},
{"name": "web_real", "real_service": "Live web", "description": "Live web fetch (real HTTP)", "live_web": true,
 "endpoints": [
  {"path": "/web_real/search", "name": "web_search", "params": {"query": "string!"}},
  {"path": "/web_real/fetch", "name": "web_fetch", "params": {"url": "string!"}}],
 "fixture_schema": {"collection": "pages", "id_field": "url",
  "fields": {"title": {"type": "string"}, "content": {"type": "string"}}}}
])json";

}  // namespace

HandlerResult generic_handler(HandlerContext& ctx) {
  switch (verb_of(ctx.endpoint.name)) {
    case Verb::list: return list_records(ctx);
    case Verb::get: return get_record(ctx);
    case Verb::create: return create_record(ctx);
    case Verb::update: return update_record(ctx);
    case Verb::remove: return delete_record(ctx);
    case Verb::echo: break;
  }
  return {200, Json{{"status", "ok"}, {"action", ctx.endpoint.name}, {"request", ctx.body}}};
}

ServiceRegistry ServiceRegistry::builtin() {
  ServiceRegistry reg;
  for (const auto& j : Json::parse(kBuiltinSpecs)) {
    ServiceSpec spec = service_spec_from_json(j);
    std::map<std::string, Handler> handlers;
    if (spec.name == "gmail") {
      handlers["list_inbox"] = list_inbox;
      handlers["send_email"] = send_email;
      handlers["create_draft"] = create_draft;
    } else if (spec.name == "calendar") {
      handlers["list_events"] = list_events;
    } else if (spec.name == "web_real") {
      handlers["web_fetch"] = web_fetch_live;
    }
    reg.add(std::move(spec), std::move(handlers));
  }
  return reg;
}

void ServiceRegistry::add(ServiceSpec spec, std::map<std::string, Handler> handlers) {
  RegisteredService rs;
  rs.schema = fixture_schema_from_json(spec.fixture_schema);
  rs.handlers = std::move(handlers);
  const std::string name = spec.name;
  rs.spec = std::move(spec);
  services_[name] = std::move(rs);
}

bool ServiceRegistry::contains(std::string_view name) const { return services_.find(name) != services_.end(); }

const RegisteredService* ServiceRegistry::find(std::string_view name) const {
  auto it = services_.find(name);
  return it == services_.end() ? nullptr : &it->second;
}

std::vector<std::string> ServiceRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : services_) out.push_back(name);
  return out;
}

std::vector<std::string> ServiceRegistry::actions(std::string_view service) const {
  std::vector<std::string> out;
  if (const auto* s = find(service)) {
    for (const auto& e : s->spec.endpoints) out.push_back(e.name);
  }
  return out;
}

bool ServiceRegistry::has_action(std::string_view service, std::string_view action) const {
  return endpoint_for_action(service, action) != nullptr;
}

const EndpointSpec* ServiceRegistry::route(std::string_view service, std::string_view path) const {
  const auto* s = find(service);
  if (!s) return nullptr;
  while (path.size() > 1 && path.back() == '/') path.remove_suffix(1);
  for (const auto& e : s->spec.endpoints) {
    if (e.path == path) return &e;
  }
  return nullptr;
}

const EndpointSpec* ServiceRegistry::endpoint_for_action(std::string_view service,
                                                         std::string_view action) const {
  const auto* s = find(service);
  if (!s) return nullptr;
  for (const auto& e : s->spec.endpoints) {
    if (e.name == action) return &e;
  }
  return nullptr;
}

bool ServiceRegistry::is_live_web(std::string_view service) const {
  const auto* s = find(service);
  return s && s->spec.live_web;
}

LiveWebPredicate ServiceRegistry::live_web_predicate() const {
  std::set<std::string, std::less<>> live;
  for (const auto& [name, s] : services_) {
    if (s.spec.live_web) live.insert(name);
  }
  return [live = std::move(live)](std::string_view s) { return live.find(s) != live.end(); };
}

void ServiceRegistry::load_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) return;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f);
    add(service_spec_from_json(Json::parse(in)));
  }
}

void save_service_spec(const std::filesystem::path& dir, const ServiceSpec& spec) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / (spec.name + ".json"));
  out << to_json(spec).dump(2) << "\n";
}

}  // namespace clawenv
