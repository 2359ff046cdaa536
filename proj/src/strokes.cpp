#include "brushgym/strokes.hpp"

#include <fstream>

#include "json.hpp"

namespace brushgym {

using nlohmann::json;

void write_stroke_list_json(const StrokeList& list, const std::string& path) {
  json doc;
  doc["canvas"] = {{"height", list.canvas_h}, {"width", list.canvas_w}, {"channels", list.channels}};
  doc["brush"] = {{"l_max", list.brush.l_max},
                  {"w_max", list.brush.w_max},
                  {"opacity", list.brush.opacity}};
  json strokes = json::array();
  for (const auto& s : list.strokes) {
    json actions = json::array();
    for (const auto& a : s.actions) {
      actions.push_back({a.alpha, a.length, a.width, a.color[0], a.color[1], a.color[2]});
    }
    strokes.push_back({{"start", {s.start[0], s.start[1]}}, {"actions", actions}});
  }
  doc["strokes"] = std::move(strokes);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << doc.dump(2) << "\n";
}

StrokeList read_stroke_list_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stroke list " + path);
  json doc = json::parse(in);

  StrokeList list;
  list.canvas_h = doc.at("canvas").at("height").get<int>();
  list.canvas_w = doc.at("canvas").at("width").get<int>();
  list.channels = doc.at("canvas").at("channels").get<int>();
  list.brush.l_max = doc.at("brush").at("l_max").get<double>();
  list.brush.w_max = doc.at("brush").at("w_max").get<double>();
  list.brush.opacity = doc.at("brush").at("opacity").get<double>();
  for (const auto& s : doc.at("strokes")) {
    StrokeActions sa;
    sa.start = {s.at("start").at(0).get<double>(), s.at("start").at(1).get<double>()};
    for (const auto& a : s.at("actions")) {
      Action act;
      act.alpha = a.at(0).get<double>();
      act.length = a.at(1).get<double>();
      act.width = a.at(2).get<double>();
      act.color = {a.at(3).get<double>(), a.at(4).get<double>(), a.at(5).get<double>()};
      sa.actions.push_back(act);
    }
    list.strokes.push_back(std::move(sa));
  }
  return list;
}

Canvas render_stroke_list(const StrokeList& list) {
  Canvas canvas(list.canvas_h, list.canvas_w, list.channels, 0.0);
  for (const auto& s : list.strokes) {
    BrushState brush{s.start[0], s.start[1], false};
    for (const auto& a : s.actions) {
      render_action(canvas, brush, a, list.brush);
    }
  }
  return canvas;
}

}  // namespace brushgym
