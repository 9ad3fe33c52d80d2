#include "mds/dataset_io.hpp"

#include <fstream>

#include "mds/error.hpp"

namespace mds {

using nlohmann::json;

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create dataset directory " + dir.string() + ": " + ec.message());
    }
    json index = json::array();
    for (const auto& r : dataset.recordings) {
        const std::string feat = r.id + ".features.csv";
        const std::string lab = r.id + ".labels.csv";
        save_features(dir / feat, r.features);
        save_labels(dir / lab, r.labels);
        index.push_back({{"id", r.id},
                         {"speaker", r.speaker_id()},
                         {"partition", to_string(r.partition)},
                         {"features", feat},
                         {"labels", lab}});
    }
    const json doc{{"task", dataset.task}, {"metadata", dataset.metadata}, {"recordings", index}};
    std::ofstream out(dir / "dataset.json");
    if (!out) {
        throw IoError("cannot write " + (dir / "dataset.json").string());
    }
    out << doc.dump(1) << '\n';
}

Dataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream in(dir / "dataset.json");
    if (!in) {
        throw IoError("cannot read " + (dir / "dataset.json").string());
    }
    const json doc = json::parse(in);
    Dataset ds;
    ds.task = doc.value("task", std::string{});
    ds.metadata = doc.value("metadata", json::object());
    for (const auto& e : doc.at("recordings")) {
        Recording r;
        r.id = e.at("id").get<std::string>();
        r.features = load_features(dir / e.at("features").get<std::string>());
        r.labels = load_labels(dir / e.at("labels").get<std::string>());
        if (e.contains("speaker")) {
            r.features.speaker_id = e.at("speaker").get<std::string>();
        }
        r.partition = partition_from_string(e.value("partition", std::string{"train"}));
        ds.recordings.push_back(std::move(r));
    }
    ds.validate();
    return ds;
}

}  // namespace mds
