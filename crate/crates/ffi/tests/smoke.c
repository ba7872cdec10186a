#include <stdio.h>
#include <string.h>

#include "par.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(int argc, char **argv)
{
    ParFeatures *buggy = NULL;
    ParFeatures *fixed = NULL;
    double v = -1.0;
    ParClassification cls;
    ParWorkspace *ws = NULL;
    char *prompt = NULL;

    CHECK(argc == 2);
    CHECK(strlen(par_version()) > 0);

    CHECK(par_features_compute("int main(){int a = 1, b = 2; a = b; b = a; return a - b;}", &buggy) == PAR_STATUS_OK);
    CHECK(par_features_compute("int main(){int a = 1, b = 2; int t = a; a = b; b = t; return a - b;}", &fixed) == PAR_STATUS_OK);
    CHECK(par_features_dataflow_count(buggy) == 4);
    CHECK(par_score_df(buggy, fixed, &v) == PAR_STATUS_OK);
    CHECK(v == 0.5);
    CHECK(par_score_ast(buggy, NULL, &v) == PAR_STATUS_NULL_ARGUMENT);
    CHECK(strstr(par_last_error(), "peer") != NULL);
    par_features_free(buggy);
    par_features_free(fixed);

    CHECK(par_score_tc("11000", "10100", &v) == PAR_STATUS_OK);
    CHECK(v == 0.5);
    CHECK(par_classify("10101", "10111", &cls) == PAR_STATUS_OK);
    CHECK(cls == PAR_CLASSIFICATION_PARTIAL_REPAIR);

    {
        ParComponentScores s = {1.0, 0.5, 0.5, 0.0, 0.0, 0};
        ParWeights w = {0.25, 0.25, 0.25, 0.25, 0.0, 0};
        CHECK(par_psm(&s, &w, &v) == PAR_STATUS_OK);
        CHECK(v == 0.5);
    }

    CHECK(par_workspace_open(argv[1], &ws) == PAR_STATUS_OK);
    CHECK(par_workspace_submission_count(ws) == 18);
    CHECK(par_workspace_prompt(ws, "digits-04", NULL, &prompt) == PAR_STATUS_OK);
    CHECK(strstr(prompt, "Reference Code") != NULL);
    par_string_free(prompt);
    CHECK(par_workspace_prompt(ws, "nope", NULL, &prompt) == PAR_STATUS_NOT_FOUND);
    par_workspace_free(ws);

    puts("ok");
    return 0;
}
