// SPDX-License-Identifier: Apache-2.0

#include "medforge/taxonomy/taxonomy.hpp"

#include <algorithm>
#include <cctype>

#include "medforge/common/errors.hpp"
#include "medforge/common/parallel.hpp"
#include "medforge/common/text.hpp"

namespace medforge::taxonomy {

using nlohmann::json;

namespace {

DeptNode leaf(std::string name, std::vector<std::string> aliases = {}) {
    return DeptNode{std::move(name), std::move(aliases), {}};
}

}  // namespace

TaxonomyTree::TaxonomyTree() {
    primaries_ = {
        DeptNode{"Internal Medicine",
                 {},
                 {leaf("Respiratory and Critical Care Medicine"), leaf("Cardiology"),
                  leaf("Endocrinology"), leaf("Gastroenterology"), leaf("Hematology"),
                  leaf("Nephrology"), leaf("Rheumatology and Immunology"), leaf("Neurology")}},
        DeptNode{"Surgery",
                 {},
                 {leaf("Gastrointestinal Surgery"), leaf("Hepatobiliary Surgery"), leaf("Urology"),
                  leaf("Cardiovascular Surgery"), leaf("Thoracic Surgery"),
                  leaf("Orthopedic Surgery"), leaf("Neurosurgery"), leaf("Burns and Plastic Surgery"),
                  leaf("Thyroid Surgery"), leaf("Breast Surgery")}},
        DeptNode{"Obstetrics and Gynecology", {}, {leaf("Gynecology"), leaf("Obstetrics")}},
        DeptNode{"Pediatrics",
                 {},
                 {leaf("Pediatric Internal Medicine"), leaf("Pediatric Surgery")}},
        DeptNode{"Otorhinolaryngology",
                 {"otorhinolaryngology ent", "ent"},
                 {leaf("Otorhinolaryngology (ENT)", {"otorhinolaryngology", "ent"}),
                  leaf("Ophthalmology"),
                  leaf("Dentistry (Oral Medicine)", {"dentistry", "oral medicine"})}},
    };
    other_ = DeptNode{kOtherDepartments,
                      {},
                      {leaf("Dermatology and Venereology"), leaf("Rehabilitation Medicine"),
                       leaf("Anesthesiology"),
                       leaf("Traditional Chinese Medicine (TCM)",
                            {"traditional chinese medicine", "tcm"})}};
}

std::size_t TaxonomyTree::secondary_count() const {
    std::size_t n = other_.children.size();
    for (const auto& p : primaries_) {
        n += p.children.size();
    }
    return n;
}

std::vector<std::string> TaxonomyTree::top_level_labels() const {
    std::vector<std::string> labels;
    labels.reserve(primaries_.size() + 1);
    for (const auto& p : primaries_) {
        labels.push_back(p.name);
    }
    labels.push_back(other_.name);
    return labels;
}

const DeptNode* TaxonomyTree::find_top_level(const std::string& name) const {
    for (const auto& p : primaries_) {
        if (p.name == name) {
            return &p;
        }
    }
    if (other_.name == name) {
        return &other_;
    }
    return nullptr;
}

bool TaxonomyTree::is_top_level_label(const std::string& name) const {
    return find_top_level(name) != nullptr;
}

std::vector<std::string> TaxonomyTree::children_of(const std::string& top_level) const {
    const DeptNode* node = find_top_level(top_level);
    if (node == nullptr) {
        throw Error("unknown department: " + top_level);
    }
    std::vector<std::string> names;
    names.reserve(node->children.size());
    for (const auto& c : node->children) {
        names.push_back(c.name);
    }
    return names;
}

bool TaxonomyTree::is_secondary_of(const std::string& top_level, const std::string& secondary) const {
    const DeptNode* node = find_top_level(top_level);
    if (node == nullptr) {
        return false;
    }
    return std::any_of(node->children.begin(), node->children.end(),
                       [&](const DeptNode& c) { return c.name == secondary; });
}

const TaxonomyTree& load_taxonomy() {
    static const TaxonomyTree tree = [] {
        TaxonomyTree t;
        if (t.primary_count() != 5 || t.secondary_count() != 29) {
            throw Error("taxonomy counts corrupted: expected 5 primaries / 29 secondaries");
        }
        return t;
    }();
    return tree;
}

std::string normalize_label(const std::string& reply) {
    std::string spaced;
    spaced.reserve(reply.size());
    for (char c : reply) {
        unsigned char uc = static_cast<unsigned char>(c);
        if (std::isalnum(uc)) {
            spaced.push_back(static_cast<char>(std::tolower(uc)));
        } else {
            spaced.push_back(' ');
        }
    }
    return collapse_whitespace(spaced);
}

namespace {

bool node_matches(const DeptNode& node, const std::string& normalized) {
    if (normalize_label(node.name) == normalized) {
        return true;
    }
    return std::any_of(node.aliases.begin(), node.aliases.end(),
                       [&](const std::string& a) { return a == normalized; });
}

}  // namespace

const std::string& classify_primary_template() {
    static const std::string tpl = R"TPL(You are a professional doctor who can classify a dialogue. Please read the following dialogue and determine which hospital department it belongs to based on its main content. The available department categories and their brief descriptions are as follows:
Internal Medicine: Diseases related to internal organs, such as heart disease, stomach problems, diabetes, etc.
Surgery: Diseases treated with surgical interventions, such as fractures, tumor removal, etc.
Obstetrics and Gynecology: Diseases and health issues related to the female reproductive system, pregnancy, and childbirth.
Pediatrics: Health and disease issues related to children.
Otorhinolaryngology (ENT): Diseases related to the ears, nose, throat, eyes, and oral cavity.
Other Departments: Diseases or issues that do not fall under any of the above departments.
Please choose the most appropriate department from the list above and output only the department name, without any additional explanation.
Here is the dialogue:
Patient: {instruction}
Doctor: {response}
Output:)TPL";
    return tpl;
}

const std::string& classify_secondary_template(const std::string& top_level) {
    static const std::string internal_medicine = R"TPL(You are a professional doctor who can classify a dialogue. Please read the following dialogue and determine which specific department within Internal Medicine it belongs to based on its content. The available department categories and their brief descriptions are as follows:
Respiratory and Critical Care Medicine: Treats respiratory system diseases such as asthma, pneumonia, chronic obstructive pulmonary disease (COPD), and provides care for critically ill patients.
Cardiology: Covers diseases related to the heart and blood vessels, such as hypertension, coronary artery disease, arrhythmias, etc.
Endocrinology: Focuses on diseases related to endocrine glands, such as diabetes, thyroid disorders, metabolic disorders, etc.
Gastroenterology: Involves diseases of the digestive system, such as gastric ulcers, hepatitis, enteritis, etc.
Hematology: Addresses blood-related diseases, such as anemia, leukemia, lymphoma, etc.
Nephrology: Involves kidney diseases, such as nephritis, renal failure, uremia, etc.
Rheumatology and Immunology: Deals with rheumatic diseases and immune system disorders, such as rheumatoid arthritis, systemic lupus erythematous, etc.
Neurology: Focuses on diseases of the nervous system, such as stroke, epilepsy, Parkinson's disease, etc.
If the dialogue content does not pertain to any of the above departments, please output 'None'.
Please choose the most appropriate department from the list above and output only the department name, without any additional explanation.
Here is the dialogue:
Patient: {instruction}
Doctor: {response}
Output:)TPL";

    static const std::string surgery = R"TPL(You are a professional doctor who can classify a dialogue. Please read the following dialogue and determine which specific department within Surgery it belongs to based on its content. The available department categories and their brief descriptions are as follows:
Gastrointestinal Surgery: Mainly involves surgical issues of the digestive system, such as stomach cancer, intestinal obstruction, etc.
Hepatobiliary Surgery: Primarily involves surgical issues related to the liver, gallbladder, and pancreas, such as liver cancer, cholecystitis, pancreatic tumors, etc.
Urology: Involves surgical issues of the urinary system, such as kidney stones, bladder tumors, benign prostatic hyperplasia, etc.
Cardiovascular Surgery: Focuses on surgical diseases of the heart and major blood vessels, such as heart valve disease, aortic aneurysm, etc.
Thoracic Surgery: Covers surgical procedures involving chest organs (lungs, esophagus, etc.), such as lung cancer and esophageal cancer.
Orthopedic Surgery: Involves surgical diseases of bones, joints, and related structures, such as fractures, arthritis, herniated discs, etc.
Neurosurgery: Handles surgical issues of the central and peripheral nervous systems, such as brain tumors, cerebral hemorrhage, spinal stenosis, etc.
Burns and Plastic Surgery: Primarily responsible for burn treatment and plastic surgery procedures, such as burn scar repair and facial reconstruction, etc.
Thyroid Surgery: Deals with surgical diseases of the thyroid and related glands, such as thyroid nodules and thyroid tumors, etc.
Breast Surgery: Involves surgical treatment of breast diseases, such as breast hyperplasia and breast cancer.
If the dialogue content does not pertain to any of the above departments, please output 'None'.
Please choose the most appropriate department from the list above and output only the department name, without any additional explanation.
Here is the dialogue:
Patient: {instruction}
Doctor: {response}
Output:)TPL";

    static const std::string obgyn = R"TPL(You are a professional doctor who can classify a dialogue. Please read the following dialogue and determine which sub-department within Obstetrics and Gynecology it belongs to based on its content. The available sub-departments and their brief descriptions are as follows:
Gynecology: Covers diseases and health issues related to the female reproductive system, such as menstrual disorders, infertility, uterine diseases, etc.
Obstetrics: Involves pregnancy, childbirth, and postpartum care, such as pregnancy health management, delivery processes, and postpartum recovery.
If the dialogue content does not pertain to any of the above sub-departments, please output 'None'.
Please choose the most appropriate department from the list above and output only the department name, without any additional explanation.
Here is the dialogue:
Patient: {instruction}
Doctor: {response}
Output:)TPL";

    static const std::string pediatrics = R"TPL(You are a professional doctor who can classify a dialogue. Please read the following dialogue and determine which specific department within Pediatrics it belongs to based on its content. The available sub-departments and their brief descriptions are as follows:
Pediatric Internal Medicine: Involves the diagnosis and treatment of internal diseases in children, including respiratory diseases, digestive system diseases, endocrine disorders, etc., such as colds, asthma, gastrointestinal issues, etc.
Pediatric Surgery: Involves the diagnosis and treatment of surgical diseases in children, including trauma, congenital deformities, urinary system issues, etc., such as fractures, hernias, etc.
If the dialogue content does not pertain to any of the above sub-departments, please output 'None'.
Please choose the most appropriate department from the list above and output only the department name, without any additional explanation.
Here is the dialogue:
Patient: {instruction}
Doctor: {response}
Output:)TPL";

    static const std::string ent = R"TPL(You are a professional doctor who can classify a dialogue. Please read the following dialogue and determine which specific department within Otorhinolaryngology (ENT) it belongs to based on its content. The available sub-departments and their brief descriptions are as follows:
Otorhinolaryngology (ENT): Involves diseases and issues related to the ears, nose, and throat, such as tinnitus, nasal congestion, sore throat, etc.
Ophthalmology: Focuses on eye health issues, such as blurred vision, eye pain, dry eye, etc.
Dentistry (Oral Medicine): Deals with issues related to the mouth, teeth, gums, etc., such as toothaches, mouth ulcers, gum bleeding, etc.
If the dialogue content does not pertain to any of the above sub-departments, please output 'None'.
Please choose the most appropriate department from the list above and output only the department name, without any additional explanation.
Here is the dialogue:
Patient: {instruction}
Doctor: {response}
Output:)TPL";

    static const std::string other = R"TPL(You are a professional doctor who can classify a dialogue. Please read the following dialogue and determine which hospital department it belongs to based on its main content. The available department categories and their brief descriptions are as follows:
Dermatology and Venereology: Primarily deals with skin diseases, sexually transmitted diseases, and related skin issues.
Rehabilitation Medicine: Focuses on restoring patients' physical functions, treating sports injuries, and post-surgical rehabilitation.
Anesthesiology: Mainly responsible for anesthesia management during surgeries, including general anesthesia and local anesthesia.
Traditional Chinese Medicine (TCM): Uses traditional Chinese medicine theories and methods to treat diseases, including acupuncture, herbal medicine, and massage (Tui Na).
If the dialogue content does not pertain to any of the above departments, please output 'None'.
Please choose the most appropriate department from the list above and output only the department name, without any additional explanation.
Here is the dialogue:
Patient: {instruction}
Doctor: {response}
Output:)TPL";

    if (top_level == "Internal Medicine") return internal_medicine;
    if (top_level == "Surgery") return surgery;
    if (top_level == "Obstetrics and Gynecology") return obgyn;
    if (top_level == "Pediatrics") return pediatrics;
    if (top_level == "Otorhinolaryngology") return ent;
    if (top_level == kOtherDepartments) return other;
    throw Error("no classification prompt for department: " + top_level);
}

namespace {

backends::ChatRequest render_dialogue_prompt(const std::string& tpl, const std::string& instruction,
                                             const std::string& response,
                                             const synthesis::ChatCallOptions& opts) {
    backends::ChatRequest req;
    req.user_prompt = synthesis::substitute(
        synthesis::substitute(tpl, "{instruction}", instruction), "{response}", response);
    req.temperature = opts.judge_temperature;
    req.max_tokens = opts.max_tokens;
    req.model_id = opts.model_id;
    return req;
}

}  // namespace

backends::ChatRequest render_primary_prompt(const std::string& instruction,
                                            const std::string& response,
                                            const synthesis::ChatCallOptions& opts) {
    return render_dialogue_prompt(classify_primary_template(), instruction, response, opts);
}

backends::ChatRequest render_secondary_prompt(const std::string& top_level,
                                              const std::string& instruction,
                                              const std::string& response,
                                              const synthesis::ChatCallOptions& opts) {
    return render_dialogue_prompt(classify_secondary_template(top_level), instruction, response,
                                  opts);
}

PrimaryResult classify_primary(const responses::SftSample& sample, backends::ChatBackend& chat,
                               const synthesis::ChatCallOptions& opts, int max_retries) {
    const TaxonomyTree& tree = load_taxonomy();
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        auto resp = chat.complete(render_primary_prompt(sample.instruction, sample.response, opts));
        std::string normalized = normalize_label(resp.text);
        for (const auto& p : tree.primaries()) {
            if (node_matches(p, normalized)) {
                return {p.name, false};
            }
        }
        if (normalize_label(tree.other_departments().name) == normalized) {
            return {tree.other_departments().name, false};
        }
    }
    // Forced assignment; flagged so analytics can exclude it.
    return {kOtherDepartments, true};
}

SecondaryResult classify_secondary(const responses::SftSample& sample, const std::string& primary,
                                   backends::ChatBackend& chat,
                                   const synthesis::ChatCallOptions& opts, int max_retries) {
    const TaxonomyTree& tree = load_taxonomy();
    const DeptNode* node = tree.find_top_level(primary);
    if (node == nullptr) {
        throw Error("classify_secondary: unknown primary " + primary);
    }
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        auto resp = chat.complete(
            render_secondary_prompt(primary, sample.instruction, sample.response, opts));
        std::string normalized = normalize_label(resp.text);
        if (normalized == "none") {
            return {kUnclassified, false};
        }
        for (const auto& child : node->children) {
            if (node_matches(child, normalized)) {
                return {child.name, false};
            }
        }
    }
    return {kUnclassified, true};
}

json distribution_to_json(const DistributionReport& report) {
    json cells = json::array();
    for (const auto& [key, count] : report.cells) {
        cells.push_back(json{{"primary", key.first}, {"secondary", key.second}, {"count", count}});
    }
    return json{{"cells", std::move(cells)}, {"flagged", report.flagged}};
}

ClassifyResult classify_corpus(const std::vector<responses::SftSample>& samples,
                               backends::ChatBackend& chat,
                               const synthesis::ChatCallOptions& opts,
                               const ClassifyPolicy& policy) {
    struct Row {
        responses::SftSample sample;
        bool flagged = false;
    };
    std::vector<Row> rows(samples.size());
    parallel_for_index(samples.size(), static_cast<size_t>(std::max(1, policy.workers)),
                       [&](size_t i) {
                           Row& row = rows[i];
                           row.sample = samples[i];
                           auto primary = classify_primary(row.sample, chat, opts, policy.max_retries);
                           auto secondary = classify_secondary(row.sample, primary.label, chat, opts,
                                                               policy.max_retries);
                           row.sample.primary_dept = primary.label;
                           row.sample.secondary_dept = secondary.label;
                           row.flagged = primary.flagged || secondary.flagged;
                       });

    ClassifyResult result;
    result.labeled.reserve(rows.size());
    for (auto& row : rows) {
        ++result.report.cells[{row.sample.primary_dept, row.sample.secondary_dept}];
        if (row.flagged) {
            ++result.report.flagged;
        }
        result.labeled.push_back(std::move(row.sample));
    }
    return result;
}

}  // namespace medforge::taxonomy
