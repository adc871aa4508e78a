#include <math.h>
#include <stdio.h>
#include <string.h>

#include "wepkit.h"

#define CHECK(cond)                                                       \
  do {                                                                    \
    if (!(cond)) {                                                        \
      fprintf(stderr, "%s:%d: check failed: %s (%s)\n", __FILE__,         \
              __LINE__, #cond, wep_last_error_message());                 \
      return 1;                                                           \
    }                                                                     \
  } while (0)

int main(void) {
  WepScaleHandle *scale = NULL;
  CHECK(wep_scale_new_default(&scale) == WEP_STATUS_OK);
  CHECK(wep_scale_len(scale) == 19);

  char *name = NULL;
  CHECK(wep_scale_nearest(scale, 0.0, 1, &name) == WEP_STATUS_OK);
  CHECK(strcmp(name, "impossible") == 0);
  wep_string_free(name);

  char *sentence = NULL;
  CHECK(wep_verbalize(scale, "likely", "john went to the kitchen", &sentence) == WEP_STATUS_OK);
  CHECK(strcmp(sentence, "It is likely that john went to the kitchen.") == 0);
  char *wep = NULL, *fact = NULL;
  CHECK(wep_extract(scale, sentence, &wep, &fact) == WEP_STATUS_OK);
  CHECK(strcmp(wep, "likely") == 0 && strcmp(fact, "john went to the kitchen") == 0);
  wep_string_free(sentence);
  wep_string_free(wep);
  wep_string_free(fact);

  WepFormulaHandle *f = NULL;
  CHECK(wep_formula_parse("((f0 & f1) ^ (f2 | f3))", &f) == WEP_STATUS_OK);
  const double probs[] = {0.7, 0.5, 0.2, 0.1};
  double p = -1.0;
  CHECK(wep_formula_infer(f, probs, 4, WEP_ENGINE_COMPOSITIONAL, &p) == WEP_STATUS_OK);
  CHECK(fabs(p - 0.434) < 1e-12);
  wep_formula_free(f);

  CHECK(wep_formula_parse("f0 & f1 | f2", &f) == WEP_STATUS_SYNTAX);
  CHECK(strlen(wep_last_error_message()) > 0);

  WepGeneratorHandle *g = NULL;
  CHECK(wep_generator_new(2, 10, 42, &g) == WEP_STATUS_OK);
  char *json = NULL;
  CHECK(wep_generator_example_json(g, 0, &json) == WEP_STATUS_OK);
  CHECK(strncmp(json, "{\"id\":\"reasoning-2hop-000000\"", 29) == 0);
  wep_string_free(json);
  wep_generator_free(g);
  CHECK(wep_generator_new(3, 10, 42, &g) == WEP_STATUS_VALIDATION);

  wep_scale_free(scale);
  printf("ok\n");
  return 0;
}
