from django.urls import path
from . import views

urlpatterns = [
    path("health", views.health),
    path("experiments", views.experiments, name="experiments"),
    path("runs", views.run_list, name="run_list"),
    path("runs/<int:pk>", views.run_detail, name="run_detail"),
]
