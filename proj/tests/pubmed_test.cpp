#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fakes.hpp"
#include "littriage/error.hpp"
#include "littriage/pubmed.hpp"

using namespace littriage;
using littriage::fixtures::FakeClock;
using littriage::fixtures::ScriptedTransport;

namespace {

const std::filesystem::path kEutils = std::filesystem::path(LITTRIAGE_TEST_DATA) / "eutils";

std::string read(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string esearch_body(const std::vector<std::string>& ids, std::size_t count) {
  std::string list;
  for (const auto& id : ids) list += (list.empty() ? "\"" : ",\"") + id + "\"";
  return R"({"esearchresult":{"count":")" + std::to_string(count) + R"(","idlist":[)" + list + "]}}";
}

std::string article_xml(const std::string& pmid, const std::string& title, int year) {
  return "<PubmedArticle><MedlineCitation><PMID>" + pmid + "</PMID><Article><Journal><JournalIssue><PubDate><Year>" +
         std::to_string(year) + "</Year></PubDate></JournalIssue></Journal><ArticleTitle>" + title +
         "</ArticleTitle></Article></MedlineCitation></PubmedArticle>";
}

std::string query_param(const std::string& url, const std::string& key) {
  const auto start = url.find(key + "=");
  if (start == std::string::npos) return {};
  const auto value = start + key.size() + 1;
  return url.substr(value, url.find('&', value) - value);
}

EutilsOptions fast_options() {
  EutilsOptions o;
  o.requests_per_second = 1000.0;
  return o;
}

}  // namespace

TEST(EutilsUrls, SearchCarriesQueryRangeAndTool) {
  EutilsOptions o;
  const auto url = build_esearch_url(o, "glaucoma deep learning", 0, 5, YearRange{2015, 2022});
  EXPECT_EQ(url,
            "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/esearch.fcgi?db=pubmed&term=glaucoma%20deep%20learning"
            "&retmax=5&retmode=json&datetype=pdat&mindate=2015&maxdate=2022&tool=littriage");
  o.api_key = "secret";
  EXPECT_NE(build_esearch_url(o, "x", 10, 5, std::nullopt).find("&retstart=10"), std::string::npos);
  EXPECT_NE(build_efetch_url(o, {"1", "2"}).find("id=1,2&retmode=xml"), std::string::npos);
  EXPECT_EQ(strip_api_key(build_efetch_url(o, {"1"})).find("secret"), std::string::npos);
}

TEST(EutilsUrls, FixtureNameIgnoresApiKey) {
  EutilsOptions a;
  EutilsOptions b;
  b.api_key = "k";
  const auto na = fixture_name(build_esearch_url(a, "q", 0, 5, std::nullopt));
  EXPECT_EQ(na, fixture_name(build_esearch_url(b, "q", 0, 5, std::nullopt)));
  EXPECT_EQ(na.rfind("esearch-", 0), 0u);
  EXPECT_EQ(na.size(), std::string("esearch-").size() + 16 + 4);
  EXPECT_NE(na, fixture_name(build_esearch_url(a, "q2", 0, 5, std::nullopt)));
}

TEST(Esearch, ParsesIdsInOrder) {
  const auto page = parse_esearch_json(read(kEutils / "esearch.json"));
  EXPECT_EQ(page.ids, (std::vector<std::string>{"36100001", "36100002", "36100003"}));
  EXPECT_EQ(page.total_count, 3u);
}

TEST(Esearch, ServiceErrorsAreProtocolErrors) {
  EXPECT_THROW(parse_esearch_json("<html>oops</html>"), ProtocolError);
  EXPECT_THROW(parse_esearch_json(R"({"esearchresult":{"ERROR":"Invalid query"}})"), ProtocolError);
  EXPECT_THROW(parse_esearch_json(R"({"esearchresult":{"count":"1","idlist":["12a"]}})"), ProtocolError);
}

TEST(Efetch, FixtureFieldsAreExact) {
  const auto parsed = parse_efetch_xml(read(kEutils / "efetch.xml"));
  ASSERT_EQ(parsed.records.size(), 3u);
  EXPECT_EQ(parsed.records[0], make_record("36100001", "Zero-shot screening of abstracts with entailment models.",
                                           "We screen abstracts without labelled training data & report accuracy.",
                                           2022));
  EXPECT_EQ(parsed.records[1], make_record("36100002", "Letter: a note on trend analysis", "", 2019));
  EXPECT_EQ(parsed.records[2].abstract,
            std::string("Manual review is slow.") + " " + "We fine-tune nothing and rely on label descriptions." +
                " " + "Accuracy reached 0.91.");
  EXPECT_EQ(parsed.records[2].year, 2021);  // PubDate has only a season; ArticleDate supplies the year
}

TEST(Efetch, MinimalSingleArticle) {
  const auto xml = "<PubmedArticleSet><PubmedArticle><MedlineCitation><PMID>1</PMID><Article>"
                   "<Journal><JournalIssue><PubDate><Year>2020</Year></PubDate></JournalIssue></Journal>"
                   "<ArticleTitle>T</ArticleTitle><Abstract><AbstractText>A</AbstractText></Abstract>"
                   "</Article></MedlineCitation></PubmedArticle></PubmedArticleSet>";
  const auto parsed = parse_efetch_xml(xml);
  ASSERT_EQ(parsed.records.size(), 1u);
  EXPECT_EQ(parsed.records[0].title, "T");
  EXPECT_EQ(parsed.records[0].abstract, "A");
  EXPECT_EQ(parsed.records[0].year, 2020);
}

TEST(Efetch, EntrezDateIsLastResort) {
  const auto xml = "<PubmedArticleSet><PubmedArticle><MedlineCitation><PMID>2</PMID><Article>"
                   "<ArticleTitle>T</ArticleTitle></Article></MedlineCitation><PubmedData><History>"
                   "<PubMedPubDate PubStatus=\"received\"><Year>2010</Year></PubMedPubDate>"
                   "<PubMedPubDate PubStatus=\"entrez\"><Year>2011</Year></PubMedPubDate>"
                   "</History></PubmedData></PubmedArticle></PubmedArticleSet>";
  EXPECT_EQ(parse_efetch_xml(xml).records.at(0).year, 2011);
}

TEST(Efetch, ArticlesWithoutTitleOrYearAreSkippedWithWarning) {
  const auto xml = "<PubmedArticleSet>" + article_xml("1", "", 2020) +
                   "<PubmedArticle><MedlineCitation><PMID>2</PMID><Article><ArticleTitle>T</ArticleTitle>"
                   "</Article></MedlineCitation></PubmedArticle>" +
                   article_xml("3", "Fine", 2020) + "</PubmedArticleSet>";
  const auto parsed = parse_efetch_xml(xml);
  ASSERT_EQ(parsed.records.size(), 1u);
  EXPECT_EQ(parsed.records[0].pmid, "3");
  EXPECT_EQ(parsed.warnings.size(), 2u);
}

TEST(Efetch, MalformedXmlReportsPosition) {
  try {
    parse_efetch_xml("<PubmedArticleSet>\n<PubmedArticle>\n<oops</PubmedArticleSet>");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("line 3"), std::string::npos) << what;
    EXPECT_NE(what.find("byte"), std::string::npos) << what;
  }
}

TEST(RateLimiterTest, EnforcesRateWithFakeClock) {
  FakeClock clock;
  RateLimiter limiter(3.0, 1.0, clock.hooks());
  const auto start = clock.now;
  for (int i = 0; i < 10; ++i) limiter.acquire();
  const std::chrono::duration<double> elapsed = clock.now - start;
  // First token is available immediately; the other nine cost 1/3 s each.
  EXPECT_NEAR(elapsed.count(), 3.0, 1e-6);
}

TEST(RateLimiterTest, NoSleepWhenUnderRate) {
  FakeClock clock;
  RateLimiter limiter(10.0, 1.0, clock.hooks());
  for (int i = 0; i < 5; ++i) {
    limiter.acquire();
    clock.now += std::chrono::milliseconds(200);
  }
  EXPECT_TRUE(clock.sleeps.empty());
}

TEST(RateLimiterTest, RejectsNonPositiveRate) {
  EXPECT_THROW(RateLimiter(0.0), UsageError);
}

TEST(EutilsOptionsTest, DefaultRateDependsOnApiKey) {
  FakeClock clock;
  auto transport = std::make_shared<ScriptedTransport>(
      [](const std::string&) { return HttpResponse{200, esearch_body({"1"}, 1)}; });
  EutilsOptions anon;
  EutilsClient a(transport, anon, clock.hooks());
  for (int i = 0; i < 4; ++i) a.search("q", 1);
  const auto anon_elapsed = clock.now;

  FakeClock clock2;
  EutilsOptions keyed;
  keyed.api_key = "k";
  EutilsClient b(transport, keyed, clock2.hooks());
  for (int i = 0; i < 4; ++i) b.search("q", 1);
  const std::chrono::steady_clock::time_point origin{std::chrono::seconds(1000)};
  EXPECT_NEAR(std::chrono::duration<double>(anon_elapsed - origin).count(), 1.0, 1e-6);
  EXPECT_NEAR(std::chrono::duration<double>(clock2.now - origin).count(), 0.3, 1e-6);
}

TEST(EutilsClientTest, SearchReturnsFixtureIdsInOrder) {
  FakeClock clock;
  auto client = EutilsClient(std::make_shared<FixtureTransport>(kEutils), fast_options(), clock.hooks());
  EXPECT_EQ(client.search("zero-shot", 10), (std::vector<std::string>{"36100001", "36100002", "36100003"}));
}

TEST(EutilsClientTest, SearchPaginatesAndCaps) {
  FakeClock clock;
  std::vector<std::string> all;
  for (int i = 0; i < 25; ++i) all.push_back(std::to_string(100 + i));
  auto transport = std::make_shared<ScriptedTransport>([&](const std::string& url) {
    const auto start = static_cast<std::size_t>(std::stoul(query_param(url, "retstart").empty() ? "0" : query_param(url, "retstart")));
    const auto max = static_cast<std::size_t>(std::stoul(query_param(url, "retmax")));
    std::vector<std::string> page(all.begin() + static_cast<long>(std::min(start, all.size())),
                                  all.begin() + static_cast<long>(std::min(start + max, all.size())));
    return HttpResponse{200, esearch_body(page, all.size())};
  });
  auto o = fast_options();
  o.search_page_size = 10;
  EutilsClient client(transport, o, clock.hooks());
  const auto ids = client.search("q", 22);
  EXPECT_EQ(ids, std::vector<std::string>(all.begin(), all.begin() + 22));
  EXPECT_EQ(transport->urls().size(), 3u);
  EXPECT_EQ(client.search("q", 100).size(), 25u);
}

TEST(EutilsClientTest, RetriesTransientFailuresWithBackoff) {
  FakeClock clock;
  std::atomic<int> calls{0};
  auto transport = std::make_shared<ScriptedTransport>([&](const std::string&) {
    const int n = calls++;
    if (n == 0) return HttpResponse{503, "busy"};
    if (n == 1) throw NetworkError("connection reset");
    if (n == 2) return HttpResponse{429, "slow down"};
    return HttpResponse{200, esearch_body({"7"}, 1)};
  });
  auto o = fast_options();
  EutilsClient client(transport, o, clock.hooks());
  EXPECT_EQ(client.search("q", 1), std::vector<std::string>{"7"});
  EXPECT_EQ(client.requests_issued(), 4u);
  std::vector<std::chrono::milliseconds> backoffs;
  for (auto s : clock.sleeps) {
    if (s >= std::chrono::milliseconds(100)) backoffs.push_back(std::chrono::duration_cast<std::chrono::milliseconds>(s));
  }
  EXPECT_EQ(backoffs, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(500),
                                                               std::chrono::milliseconds(1000),
                                                               std::chrono::milliseconds(2000)}));
}

TEST(EutilsClientTest, GivesUpAfterMaxRetries) {
  FakeClock clock;
  auto transport = std::make_shared<ScriptedTransport>([](const std::string&) -> HttpResponse {
    throw NetworkError("down");
  });
  EutilsClient client(transport, fast_options(), clock.hooks());
  EXPECT_THROW(client.search("q", 1), NetworkError);
  EXPECT_EQ(transport->urls().size(), 4u);
}

TEST(EutilsClientTest, ClientErrorsAreNotRetried) {
  FakeClock clock;
  auto transport = std::make_shared<ScriptedTransport>([](const std::string&) { return HttpResponse{400, "bad"}; });
  EutilsClient client(transport, fast_options(), clock.hooks());
  EXPECT_THROW(client.search("q", 1), ProtocolError);
  EXPECT_EQ(transport->urls().size(), 1u);
}

TEST(EutilsClientTest, FetchBatchesConcurrentlyAndReportsMissing) {
  FakeClock clock;
  std::vector<std::string> requested;
  for (int i = 0; i < 9; ++i) requested.push_back(std::to_string(500 + i));
  auto transport = std::make_shared<ScriptedTransport>([](const std::string& url) {
    std::string ids = query_param(url, "id");
    std::string xml = "<PubmedArticleSet>";
    std::stringstream ss(ids);
    std::string id;
    while (std::getline(ss, id, ',')) {
      if (id == "504") continue;  // not returned by the service
      xml += article_xml(id, "Title " + id, 2020);
    }
    return HttpResponse{200, xml + "</PubmedArticleSet>"};
  });
  auto o = fast_options();
  o.fetch_batch_size = 2;
  o.max_in_flight = 3;
  EutilsClient client(transport, o, clock.hooks());
  const auto result = client.fetch(requested);
  EXPECT_EQ(transport->urls().size(), 5u);
  ASSERT_EQ(result.records.size(), 8u);
  EXPECT_EQ(result.missing, std::vector<std::string>{"504"});
  std::set<std::string> requested_set(requested.begin(), requested.end());
  std::size_t last = 0;
  for (const auto& r : result.records) {
    EXPECT_TRUE(requested_set.count(r.pmid));
    const auto pos = static_cast<std::size_t>(std::find(requested.begin(), requested.end(), r.pmid) - requested.begin());
    EXPECT_GE(pos, last);
    last = pos;
  }
}

TEST(FixtureTransportTest, MissIsNetworkErrorNamingFile) {
  FixtureTransport t(kEutils);
  try {
    t.get("https://eutils.ncbi.nlm.nih.gov/entrez/eutils/elink.fcgi?db=pubmed");
    FAIL();
  } catch (const NetworkError& e) {
    EXPECT_NE(std::string(e.what()).find("elink"), std::string::npos);
  }
}

TEST(FixtureTransportTest, RecordingThenReplayIsIdentical) {
  const auto dir = std::filesystem::temp_directory_path() / "littriage_recording_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  auto live = std::make_shared<ScriptedTransport>([](const std::string& url) {
    if (url.find("esearch") != std::string::npos) return HttpResponse{200, esearch_body({"1", "2"}, 2)};
    return HttpResponse{200, "<PubmedArticleSet>" + article_xml("1", "A", 2020) + article_xml("2", "B", 2021) +
                                 "</PubmedArticleSet>"};
  });
  FakeClock clock;
  auto o = fast_options();
  o.api_key = "do-not-store";
  EutilsClient recording(std::make_shared<RecordingTransport>(live, dir), o, clock.hooks());
  const auto first = recording.fetch(recording.search("q", 5));

  EutilsClient replay(std::make_shared<FixtureTransport>(dir), o, clock.hooks());
  const auto second = replay.fetch(replay.search("q", 5));
  EXPECT_EQ(first.records, second.records);
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    EXPECT_EQ(read(entry.path()).find("do-not-store"), std::string::npos);
  }
  std::filesystem::remove_all(dir);
}
