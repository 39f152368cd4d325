from django.http import JsonResponse
from django.views.decorators.http import require_GET

from .experiments import EXPERIMENTS, catalogue
from .models import ExperimentRun
from .serializers import ExperimentRunSerializer


@require_GET
def health(request):
    return JsonResponse({"status": "ok"})


@require_GET
def experiments(request):
    """Same table as `manage.py list`."""
    return JsonResponse({"experiments": catalogue()})


@require_GET
def run_list(request):
    """
    Recorded runs, newest first: /api/runs?experiment=ensemble&limit=20
    """
    runs = ExperimentRun.objects.all()
    experiment = request.GET.get("experiment")
    if experiment:
        if experiment not in EXPERIMENTS:
            return JsonResponse({"error": f"unknown experiment {experiment!r}"}, status=400)
        runs = runs.filter(experiment=experiment)
    try:
        limit = int(request.GET.get("limit", 50))
        if limit < 1:
            raise ValueError("limit must be positive")
    except ValueError as e:
        return JsonResponse({"error": f"bad limit: {e}"}, status=400)
    return JsonResponse({"runs": ExperimentRunSerializer(runs[:limit], many=True).data})


@require_GET
def run_detail(request, pk):
    run = ExperimentRun.objects.filter(pk=pk).first()
    if run is None:
        return JsonResponse({"error": "not found"}, status=404)
    return JsonResponse(ExperimentRunSerializer(run).data)
